"""
Splitting the uplink so everyone finishes together
==================================================

Each scheduled device first computes locally, then uploads its model over a
share of the band. The slowest device sets the round latency, so the best
split makes all finish times equal. The share each device needs for a given
deadline has a closed form through the secondary branch of Lambert W; a
halving search on the deadline then makes the shares add up to one.
"""
import numpy as np

from fedsched.allocator import equal_split, finish_times, optimal_allocation, required_gamma
from fedsched.numeric import Branch, lambert_w
from fedsched.wireless import (DeviceProfile, RadioConfig, RoundState, channel_gain_sq,
                               dbm_to_watts, noise_density_from_dbm_per_mhz)

# Lambert W inverts w * exp(w); both real branches meet at -1/e
for x in (-0.3, -0.1, -0.01):
    w0, w1 = lambert_w(Branch.PRINCIPAL, x), lambert_w(Branch.SECONDARY, x)
    print(f"x={x:6.2f}  W0={w0: .6f}  W-1={w1: .6f}  check={w1 * np.exp(w1): .6f}")

# a 20 MHz cell and a model of about 50k float32 parameters
radio = RadioConfig(20e6, noise_density_from_dbm_per_mhz(-114.0), 32 * 50_816, 3.76)
profiles = [DeviceProfile(i, 600, 128, 0.5, 2.0, dbm_to_watts(10.0)) for i in range(5)]

# five devices at different distances with different compute times
dist = np.array([80.0, 200.0, 350.0, 480.0, 590.0])
tcp = np.array([0.45, 0.38, 0.52, 0.41, 0.36])
rs = RoundState(0, dist, channel_gain_sq(dist, radio.path_loss_exponent), tcp)

# share the nearest device needs to finish by 0.6 s
print("share for a 0.6 s deadline:", required_gamma(0.6, tcp[0], dbm_to_watts(10.0),
                                                    rs.channel_gain_sq[0], radio))

opt = optimal_allocation(range(5), rs, profiles, radio)
eq = equal_split(range(5), rs, profiles, radio)
print(f"optimal t* = {opt.t_star_s:.4f} s after {opt.iterations} halvings")
print("shares      ", np.round(opt.gamma, 4), "sum", round(opt.gamma.sum(), 6))
print("finish times", np.round(finish_times(range(5), opt.gamma, rs, profiles, radio), 6))
print(f"equal split latency = {eq.t_star_s:.4f} s")
