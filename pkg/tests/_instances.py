"""Random radio/compute instances shared by the tests."""
import numpy as np

from fedsched.wireless import (DeviceProfile, RadioConfig, RoundState, channel_gain_sq,
                               dbm_to_watts, noise_density_from_dbm_per_mhz)

# a model of ~50k float32 parameters keeps upload time comparable to compute time
S_BITS = 32 * 50_816


def radio(s_bits=S_BITS, bandwidth_hz=20e6, alpha=3.76):
    return RadioConfig(bandwidth_hz, noise_density_from_dbm_per_mhz(-114.0), s_bits, alpha)


def profiles(m, dataset_size=100, batch=100, power_dbm=10.0, a=0.5):
    power = np.broadcast_to(np.asarray(power_dbm, dtype=float), (m,))
    return [DeviceProfile(i, dataset_size, batch, a, 1.0 / a, dbm_to_watts(float(power[i])))
            for i in range(m)]


def random_instance(rng, m, *, radius=600.0, alpha=3.76, s_bits=S_BITS):
    """A round with random compute latency, distance and transmit power."""
    rad = radio(s_bits=s_bits, alpha=alpha)
    profs = profiles(m, power_dbm=rng.uniform(0.0, 20.0, size=m))
    dist = radius * np.sqrt(rng.uniform(1e-4, 1.0, size=m))
    tcp = rng.uniform(0.05, 1.0, size=m)
    rs = RoundState(0, dist, channel_gain_sq(dist, alpha), tcp)
    return rs, profs, rad
