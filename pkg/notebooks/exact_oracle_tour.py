"""
Exact oracles on the bundled two-state MDP
==========================================

The dynamic-programming oracle gives J_H, its gradient and Hessian exactly
for finite MDPs.  Here they are compared with the sampled estimators, and the
truncation error of the gradient is tracked against the closed-form bound.
"""
import numpy as np

from normpg.core import RngHandle
from normpg.envs import two_state_mdp
from normpg.estimators import estimator_constants, grad_estimate, hvp_estimate, sample_batch
from normpg.oracle import exact_eval, exact_grad_JH, exact_hvp_JH, gradient_domination_check
from normpg.policies import SoftmaxTabularPolicy

mdp = two_state_mdp(0.9)
policy = SoftmaxTabularPolicy.for_mdp(mdp)
rng = RngHandle(0).generator()
theta = rng.normal(size=policy.dim)
H = 40

# sampled gradient and HVP against the exact values
exact_g = exact_grad_JH(mdp, policy, theta, H)
u = rng.normal(size=policy.dim)
exact_hv = exact_hvp_JH(mdp, policy, theta, H, u)
for n in (100, 1_000, 10_000):
    batch = sample_batch(mdp, policy, theta, H, n, rng)
    g = grad_estimate(batch, policy, theta, mdp.discount).mean(axis=0)
    hv = hvp_estimate(batch, policy, theta, mdp.discount, u).mean(axis=0)
    print(f"n={n:6d}  |g - grad| / |grad| = {np.linalg.norm(g - exact_g) / np.linalg.norm(exact_g):.3f}"
          f"  |hv - Hu| / |Hu| = {np.linalg.norm(hv - exact_hv) / np.linalg.norm(exact_hv):.3f}")

# truncation: the gap to the infinite-horizon gradient shrinks like discount^H
b = policy.policy_bounds()
full = exact_eval(mdp, policy, theta).grad
for h in (5, 10, 20, 40):
    gap = np.linalg.norm(exact_grad_JH(mdp, policy, theta, h, "dp") - full)
    D_g = estimator_constants(b.M_g, b.M_h, b.l_2, mdp.r_max, mdp.discount, h).D_g
    print(f"H={h:3d}  gap={gap:.2e}  bound={D_g * mdp.discount**h:.2e}")

# gradient domination holds for the full tabular parameterization
check = gradient_domination_check(mdp, policy, theta)
print(f"domination: lhs={check.lhs:.4f} rhs={check.rhs:.4f} mu_F={check.mu_F:.4f} holds={check.holds}")
