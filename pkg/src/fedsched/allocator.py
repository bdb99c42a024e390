"""Minimum-latency FDMA bandwidth split for a scheduled device set.

For a target round latency ``t`` each device needs the bandwidth share that
makes its compute-plus-upload time exactly ``t``. With
``c = P h^2 / (B N0)`` and ``G = S ln2 / ((t - t_cp) B c)`` that share is::

    gamma = S ln2 / ((t - t_cp) B (-W_{-1}(-G e^{-G}) - G))

which is infeasible when ``t <= t_cp`` or ``G >= 1``. The optimal round
latency is the ``t`` at which the shares sum to one; it is found by the
halving search in :func:`optimal_allocation`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .numeric import Branch, lambert_w
from .wireless import DeviceProfile, RadioConfig, RoundState

DEFAULT_EPSILON = 1e-4
_LN2 = math.log(2.0)
_MAX_SEARCH_ITER = 400
_MAX_TUP_DOUBLINGS = 60


class AllocationSearchError(RuntimeError):
    """Raised when the search upper bound is too small (``s(t_up) > 1``)."""


@dataclass
class AllocationResult:
    scheduled: tuple[int, ...]
    t_star_s: float
    gamma: np.ndarray
    iterations: int
    residual: float


def _gamma_block(t, tcp, pw, hsq, radio: RadioConfig) -> np.ndarray:
    """Required shares; ``t`` broadcasts against the device arrays. inf = infeasible."""
    delta = np.asarray(t, dtype=float) - tcp
    delta, tcp, pw, hsq = np.broadcast_arrays(delta, tcp, pw, hsq)
    out = np.full(delta.shape, np.inf)
    pos = delta > 0
    if not pos.any():
        return out
    s_ln2 = radio.model_size_bits * _LN2
    big_g = np.full(delta.shape, np.inf)
    big_g[pos] = s_ln2 * radio.noise_density_w_per_hz / (delta[pos] * pw[pos] * hsq[pos])
    ok = big_g < 1.0
    if not ok.any():
        return out
    g = big_g[ok]
    arg = np.minimum(-g * np.exp(-g), -np.finfo(float).tiny)
    w = lambert_w(Branch.SECONDARY, arg)
    out[ok] = s_ln2 / (delta[ok] * radio.bandwidth_hz * (-w - g))
    return out


def required_gamma(t_target: float, t_cp: float, p_w: float, h_sq: float,
                   radio: RadioConfig) -> float:
    """Bandwidth share that finishes a device exactly at ``t_target``.

    Returns ``math.inf`` when no share (however large) can meet the target.
    """
    if not (t_cp > 0 and p_w > 0 and h_sq > 0):
        raise ValueError("t_cp, p_w and h_sq must be positive")
    return float(_gamma_block(t_target, t_cp, p_w, h_sq, radio))


def standalone_comm_s(h_sq, p_w, radio: RadioConfig):
    """Upload time with the whole band."""
    c = np.asarray(p_w, dtype=float) * h_sq / (radio.bandwidth_hz * radio.noise_density_w_per_hz)
    return radio.model_size_bits * _LN2 / (radio.bandwidth_hz * np.log1p(c))


def standalone_latency(i: int, round_state: RoundState, profiles: Sequence[DeviceProfile],
                       radio: RadioConfig) -> float:
    """Round latency of device ``i`` scheduled alone (all bandwidth)."""
    return float(round_state.comp_latency_s[i]
                 + standalone_comm_s(round_state.channel_gain_sq[i], profiles[i].tx_power_w, radio))


def finish_times(scheduled: Sequence[int], gamma, round_state: RoundState,
                 profiles: Sequence[DeviceProfile], radio: RadioConfig) -> np.ndarray:
    """Compute-plus-upload time of each scheduled device under shares ``gamma``."""
    idx = np.asarray(scheduled, dtype=int)
    pw = np.array([profiles[i].tx_power_w for i in idx])
    bw = np.asarray(gamma, dtype=float) * radio.bandwidth_hz
    snr = pw * round_state.channel_gain_sq[idx] / (bw * radio.noise_density_w_per_hz)
    rate = bw * np.log1p(snr) / _LN2
    return round_state.comp_latency_s[idx] + radio.model_size_bits / rate


def default_t_up(tcp: np.ndarray, comm1: np.ndarray) -> np.ndarray:
    # an equal split already meets this bound: rate(1/n) >= rate(1)/n, with equality
    # at n = 1, hence the slack against rounding
    n = tcp.shape[-1]
    return (tcp.max(axis=-1) + n * comm1.max(axis=-1)) * (1.0 + 1e-9)


def _search(tcp: np.ndarray, pw: np.ndarray, hsq: np.ndarray, radio: RadioConfig,
            eps: float, t_up: np.ndarray):
    """Halving search run in lockstep over the rows of ``(k, n)`` arrays.

    Every row follows the same update rules independently, so row ``r`` of the
    output equals a single-row search on row ``r``.
    """
    k = tcp.shape[0]
    t_low = tcp.max(axis=1)
    t_up = np.array(t_up, dtype=float)
    t = t_up.copy()
    iters = np.zeros(k, dtype=int)
    s_final = np.full(k, np.nan)
    gam_final = np.full(tcp.shape, np.nan)
    active = np.ones(k, dtype=bool)
    for it in range(_MAX_SEARCH_ITER):
        rows = np.flatnonzero(active)
        if rows.size == 0:
            break
        gam = _gamma_block(t[rows, None], tcp[rows], pw[rows], hsq[rows], radio)
        s = gam.sum(axis=1)
        iters[rows] += 1
        if it == 0:
            too_small = s > 1.0
            if too_small.any():
                raise AllocationSearchError(
                    f"t_up={t[rows][too_small][0]!r} needs share sum {s[too_small][0]!r} > 1; "
                    "enlarge t_up")
        hit = (s >= 1.0 - eps) & (s <= 1.0)
        done = rows[hit]
        s_final[done] = s[hit]
        gam_final[done] = gam[hit]
        active[done] = False
        surplus = s < 1.0 - eps
        r = rows[surplus]
        t_up[r] = t[r]
        t[r] = 0.5 * (t[r] + t_low[r])
        deficit = ~hit & ~surplus
        r = rows[deficit]
        t_low[r] = t[r]
        t[r] = 0.5 * (t[r] + t_up[r])
    if active.any():
        raise RuntimeError(f"allocation search did not reach the 1-eps band (eps={eps})")
    return t, gam_final, iters, s_final


def _device_arrays(sets: np.ndarray, round_state: RoundState,
                   profiles: Sequence[DeviceProfile]):
    power = np.array([p.tx_power_w for p in profiles])
    return (round_state.comp_latency_s[sets], power[sets],
            round_state.channel_gain_sq[sets])


def _search_sets(sets: np.ndarray, round_state: RoundState, profiles: Sequence[DeviceProfile],
                 radio: RadioConfig, eps: float, t_up=None):
    tcp, pw, hsq = _device_arrays(sets, round_state, profiles)
    if t_up is not None:
        t_up = np.broadcast_to(np.asarray(t_up, dtype=float), (sets.shape[0],))
        if np.any(t_up <= tcp.max(axis=1)):
            raise ValueError("t_up must exceed the largest compute latency")
        return _search(tcp, pw, hsq, radio, eps, t_up)
    t_up = default_t_up(tcp, standalone_comm_s(hsq, pw, radio))
    for _ in range(_MAX_TUP_DOUBLINGS):
        try:
            return _search(tcp, pw, hsq, radio, eps, t_up)
        except AllocationSearchError:
            t_up = 2.0 * t_up
    raise AllocationSearchError("could not find a feasible upper bound")


def optimal_allocation(scheduled: Sequence[int], round_state: RoundState,
                       profiles: Sequence[DeviceProfile], radio: RadioConfig,
                       eps: float = DEFAULT_EPSILON, t_up: float | None = None) -> AllocationResult:
    """Minimal round latency ``t*`` and the shares that achieve it.

    ``round_state`` supplies ``comp_latency_s`` and ``channel_gain_sq``; pass
    ``round_state.observed()`` to allocate on the controller's estimates.
    ``gamma`` is aligned with ``scheduled``. Without an explicit ``t_up`` the
    bound is chosen automatically and doubled until feasible.
    """
    scheduled = tuple(int(i) for i in scheduled)
    if not scheduled:
        raise ValueError("scheduled set is empty")
    if not 0 < eps < 0.1:
        raise ValueError("eps must lie in (0, 0.1)")
    sets = np.array([scheduled], dtype=int)
    t, gam, iters, s = _search_sets(sets, round_state, profiles, radio, eps, t_up)
    return AllocationResult(scheduled, float(t[0]), gam[0].copy(), int(iters[0]), float(1.0 - s[0]))


def t_star_of_sets(sets, round_state: RoundState, profiles: Sequence[DeviceProfile],
                   radio: RadioConfig, eps: float = DEFAULT_EPSILON) -> np.ndarray:
    """``t*`` for each row of an ``(k, n)`` array of equal-size device sets."""
    sets = np.atleast_2d(np.asarray(sets, dtype=int))
    t, _, _, _ = _search_sets(sets, round_state, profiles, radio, eps)
    return t


def equal_split(scheduled: Sequence[int], round_state: RoundState,
                profiles: Sequence[DeviceProfile], radio: RadioConfig) -> AllocationResult:
    """Shares ``1/n`` each; latency is the slowest device's finish time."""
    scheduled = tuple(int(i) for i in scheduled)
    gamma = np.full(len(scheduled), 1.0 / len(scheduled))
    t = finish_times(scheduled, gamma, round_state, profiles, radio).max()
    return AllocationResult(scheduled, float(t), gamma, 0, float(1.0 - gamma.sum()))
