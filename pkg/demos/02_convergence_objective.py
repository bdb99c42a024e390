"""
How many devices per round?
===========================

The scheduler scores a candidate set with an upper bound on the loss gap
after the remaining time budget. Scheduling fewer devices gives shorter
rounds, hence more of them (the first term shrinks), but leaves a
partial-participation penalty (the last term grows). This script tabulates
both sides for a made-up round.
"""
import numpy as np

from fedsched.bound import B_pi, BoundParams, epsilon0, h, k_hat, objective_C

M = 20
# initial estimates used before any device has trained
params = BoundParams(rho=1.5, beta=12.0, delta_i=np.full(M, 2.0), eta=0.01, tau=5, phi=0.05,
                     dataset_sizes=np.full(M, 100))
print("rho * h(tau) =", params.rho * h(params.delta, params.beta, params.eta, params.tau))

# assume round latency grows roughly linearly with the number of devices
T = 60.0
print(" n   t*     K   eps0      B(n)      C")
for n in (1, 2, 4, 6, 8, 12, 16, 20):
    t_star = 0.35 + 0.04 * n
    K, _ = k_hat(T, t_star)
    b = B_pi(n, params)
    print(f"{n:2d}  {t_star:.2f}  {K:3d}  {epsilon0(K, b, params):.4f}  {b:.2e}  "
          f"{objective_C(K, n, params):.4f}")
