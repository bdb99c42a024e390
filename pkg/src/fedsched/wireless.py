"""Radio and latency models for one FDMA cell.

Devices sit uniformly in a disk around the base station and are re-placed
every round. Channel power gain is pure path loss ``d**-alpha``; local
computation time follows a shifted exponential.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class RadioConfig:
    bandwidth_hz: float
    noise_density_w_per_hz: float
    model_size_bits: float
    path_loss_exponent: float

    def __post_init__(self):
        for name in ("bandwidth_hz", "noise_density_w_per_hz", "model_size_bits"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.path_loss_exponent > 2:
            raise ValueError("path_loss_exponent must exceed 2")


@dataclass(frozen=True)
class DeviceProfile:
    """Static device attributes.

    ``shift_ms_per_sample`` is the deterministic per-sample compute floor and
    ``rate_param`` (samples per ms) sets the exponential tail, whose mean is
    ``tau * d / rate_param`` milliseconds.
    """

    id: int
    dataset_size: int
    batch_size: int
    shift_ms_per_sample: float
    rate_param: float
    tx_power_w: float

    def __post_init__(self):
        if not self.dataset_size >= self.batch_size >= 1:
            raise ValueError(f"device {self.id}: need dataset_size >= batch_size >= 1")
        if not (self.shift_ms_per_sample > 0 and self.rate_param > 0 and self.tx_power_w > 0):
            raise ValueError(f"device {self.id}: compute and power parameters must be positive")


@dataclass
class RoundState:
    """Per-round channel and compute realisations, indexed by device id.

    The ``observed_*`` arrays are what the controller sees; they equal the
    true arrays unless estimation error is injected.
    """

    round_index: int
    distances_m: np.ndarray
    channel_gain_sq: np.ndarray
    comp_latency_s: np.ndarray
    observed_gain_sq: np.ndarray = field(default=None)
    observed_comp_latency: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.observed_gain_sq is None:
            self.observed_gain_sq = self.channel_gain_sq
        if self.observed_comp_latency is None:
            self.observed_comp_latency = self.comp_latency_s
        for arr in (self.channel_gain_sq, self.comp_latency_s,
                    self.observed_gain_sq, self.observed_comp_latency):
            if np.any(arr <= 0):
                raise ValueError("gains and latencies must be strictly positive")

    @property
    def num_devices(self) -> int:
        return len(self.channel_gain_sq)

    def observed(self) -> "RoundState":
        """View in which the observed values play the role of the true ones."""
        return RoundState(self.round_index, self.distances_m,
                          self.observed_gain_sq, self.observed_comp_latency)


def dbm_to_watts(p_dbm):
    out = 10.0 ** ((np.asarray(p_dbm, dtype=float) - 30.0) / 10.0)
    return float(out) if out.ndim == 0 else out


def noise_density_from_dbm_per_mhz(n0_dbm_per_mhz: float) -> float:
    """dBm/MHz to W/Hz."""
    return dbm_to_watts(n0_dbm_per_mhz) / 1e6


def place_devices(rng: np.random.Generator, count: int, radius_m: float,
                  min_dist_m: float = 1.0) -> np.ndarray:
    """Distances to the cell centre of ``count`` points uniform in a disk."""
    if not radius_m > min_dist_m > 0:
        raise ValueError("need radius_m > min_dist_m > 0")
    if count == 0:
        return np.empty(0)
    r = radius_m * np.sqrt(rng.random(count))
    return np.maximum(r, min_dist_m)


def channel_gain_sq(distance_m, alpha: float):
    out = np.asarray(distance_m, dtype=float) ** (-alpha)
    return float(out) if out.ndim == 0 else out


def comp_latency_shift_s(profile: DeviceProfile, tau: int) -> float:
    return profile.shift_ms_per_sample * tau * profile.batch_size * 1e-3


def comp_latency_mean_s(profile: DeviceProfile, tau: int) -> float:
    return comp_latency_shift_s(profile, tau) + tau * profile.batch_size / profile.rate_param * 1e-3


def sample_comp_latency(rng: np.random.Generator, profile: DeviceProfile, tau: int,
                        size=None):
    """Shifted-exponential local update time in seconds."""
    if tau < 1:
        raise ValueError("tau must be >= 1")
    shift = comp_latency_shift_s(profile, tau)
    scale = tau * profile.batch_size / profile.rate_param * 1e-3
    return shift + rng.exponential(scale, size=size)


def achievable_rate(gamma, radio: RadioConfig, p_w, h_sq):
    """FDMA rate in bits/s for bandwidth share ``gamma``."""
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma <= 0):
        raise ValueError("bandwidth share must be positive")
    bw = gamma * radio.bandwidth_hz
    snr = np.asarray(p_w, dtype=float) * h_sq / (bw * radio.noise_density_w_per_hz)
    rate = bw * np.log1p(snr) / math.log(2.0)
    return float(rate) if rate.ndim == 0 else rate


def comm_latency(s_bits: float, rate):
    if np.any(np.asarray(rate) <= 0):
        raise ValueError("rate must be positive")
    return s_bits / rate


def perturb(value, rel_std: float, rng: np.random.Generator):
    """Add zero-mean Gaussian error with std ``rel_std * value``.

    Non-positive draws are resampled so the result stays strictly positive.
    """
    if rel_std < 0:
        raise ValueError("rel_std must be >= 0")
    value = np.asarray(value, dtype=float)
    if rel_std == 0:
        return float(value) if value.ndim == 0 else value.copy()
    out = value + rng.normal(0.0, 1.0, size=value.shape) * rel_std * value
    bad = out <= 0
    while bad.any():
        out[bad] = value[bad] + rng.normal(0.0, 1.0, size=int(bad.sum())) * rel_std * value[bad]
        bad = out <= 0
    return float(out) if out.ndim == 0 else out


def sample_round(k: int, profiles: list[DeviceProfile], radio: RadioConfig, tau: int, *,
                 radius_m: float, min_dist_m: float,
                 placement_rng: np.random.Generator, compute_rng: np.random.Generator,
                 channel_rng: np.random.Generator | None = None,
                 estimation_rng: np.random.Generator | None = None,
                 error_rel_std: float = 0.0, fading: bool = False) -> RoundState:
    """Draw positions, gains and compute times for round ``k``.

    Estimation error is applied to the channel amplitude ``h`` and to the
    compute latency, each with std ``error_rel_std`` times the true value.
    ``fading`` multiplies the gain by a unit-mean exponential (Rayleigh
    power) draw from ``channel_rng``.
    """
    m = len(profiles)
    dist = place_devices(placement_rng, m, radius_m, min_dist_m)
    gain = channel_gain_sq(dist, radio.path_loss_exponent)
    if fading:
        if channel_rng is None:
            raise ValueError("fading needs a channel rng")
        gain = gain * channel_rng.exponential(1.0, size=m)
    tcp = np.array([sample_comp_latency(compute_rng, p, tau) for p in profiles])
    if error_rel_std > 0:
        if estimation_rng is None:
            raise ValueError("estimation error needs an estimation rng")
        obs_gain = perturb(np.sqrt(gain), error_rel_std, estimation_rng) ** 2
        obs_tcp = perturb(tcp, error_rel_std, estimation_rng)
    else:
        obs_gain, obs_tcp = gain, tcp
    return RoundState(k, dist, gain, tcp, obs_gain, obs_tcp)
