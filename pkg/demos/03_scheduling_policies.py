"""
One round, six policies
=======================

Draw a single round of a 20-device cell and look at what each policy
schedules and how long the round takes. FC grows a set greedily (adding the
device that least increases the round latency) while the bound objective
does not get worse; the others are fixed-size or deadline-driven baselines.
"""
import numpy as np

from fedsched.bound import BoundParams
from fedsched.scheduler import PolicySpec, schedule
from fedsched.wireless import (DeviceProfile, RadioConfig, dbm_to_watts,
                               noise_density_from_dbm_per_mhz, sample_round)

M = 20
radio = RadioConfig(20e6, noise_density_from_dbm_per_mhz(-114.0), 32 * 50_816, 3.76)
profiles = [DeviceProfile(i, 100, 100, 0.5, 2.0, dbm_to_watts(10.0)) for i in range(M)]
rng = np.random.default_rng(3)
rs = sample_round(1, profiles, radio, tau=5, radius_m=600.0, min_dist_m=1.0,
                  placement_rng=rng, compute_rng=rng)
params = BoundParams(1.5, 12.0, np.full(M, 2.0), 0.01, 5, 0.05, np.full(M, 100))

for text in ("FC", "FixedN:5", "RD:5", "PF:5", "CS-h", "AS-h"):
    policy = PolicySpec.parse(text)
    d = schedule(policy, rs, profiles, radio, params=params, T=60.0, rng=np.random.default_rng(0))
    print(f"{str(policy):9s} n={len(d.scheduled):2d}  t*={d.allocation.t_star_s:.3f} s  "
          f"K_hat={d.K_hat}  devices={sorted(d.scheduled)}")

# FC keeps a trace of every step it evaluated, including the one it rejected
d = schedule(PolicySpec("FC"), rs, profiles, radio, params=params, T=60.0)
for size, t, c in d.trace:
    print(f"  size {size:2d}: t*={t:.3f}  C={c:.5f}")
