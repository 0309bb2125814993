"""Normalized and Hessian-aided policy-gradient methods with exact finite-MDP oracles."""
from .core import Kind, RngHandle, ScheduleError, ScheduleSpec, horizon, momentum, step_size
from .envs import FiniteMdp, PointMassEnv, make_env, point_mass, random_walk_mdp, two_state_mdp
from .optimizers import OptimizerState, PolicyGradientOracle, RunRecord, run, run_single
from .policies import (
    CauchyLinearPolicy,
    GaussianLinearPolicy,
    SoftmaxLinearPolicy,
    SoftmaxTabularPolicy,
    make_policy,
)
from .synth import SynthProblem, fit_rate

__version__ = "0.1.0"
