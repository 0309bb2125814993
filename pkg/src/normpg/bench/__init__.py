"""Experiment harness: configs, seeded runs, aggregation, plots and self-checks."""
from .aggregate import aggregate, nearest_rank, summarize
from .checks import CheckResult, run_suite
from .config import ExperimentConfig, load_config, parse_config
from .runner import run_experiment, run_sweep
