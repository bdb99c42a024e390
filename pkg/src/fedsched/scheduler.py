"""Per-round device selection policies.

All policies decide on the controller's view of the round
(``RoundState.observed()``); the realised latency is computed by the caller
from the true values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .allocator import (DEFAULT_EPSILON, AllocationResult, equal_split, finish_times,
                        optimal_allocation, standalone_comm_s, t_star_of_sets)
from .bound import BoundParams, k_hat, objective_C
from .wireless import DeviceProfile, RadioConfig, RoundState

POLICY_KINDS = ("FC", "FIXEDN", "RD", "PF", "CS", "AS")
# named thresholds used for the CS/AS baselines
THRESHOLD_ALIASES = {"CS-L": ("CS", 0.4), "CS-H": ("CS", 1.5),
                     "AS-L": ("AS", 0.4), "AS-H": ("AS", 1.5)}


@dataclass(frozen=True)
class PolicySpec:
    kind: str
    n: int | None = None
    threshold_s: float | None = None

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        if kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy {self.kind!r}")
        if kind in ("FIXEDN", "RD", "PF") and (self.n is None or self.n < 1):
            raise ValueError(f"{kind} needs n >= 1")
        if kind in ("CS", "AS") and not (self.threshold_s and self.threshold_s > 0):
            raise ValueError(f"{kind} needs a positive threshold")

    @classmethod
    def parse(cls, text: str) -> "PolicySpec":
        """``FC``, ``FixedN:<n>``, ``RD:<n>``, ``PF:<n>``, ``CS:<sec>``, ``AS:<sec>``,
        or one of ``CS-l``, ``CS-h``, ``AS-l``, ``AS-h``."""
        t = text.strip()
        if t.upper() in THRESHOLD_ALIASES:
            kind, th = THRESHOLD_ALIASES[t.upper()]
            return cls(kind, threshold_s=th)
        kind, _, arg = t.partition(":")
        kind = kind.upper()
        if kind == "FC" and not arg:
            return cls("FC")
        if kind in ("FIXEDN", "RD", "PF") and arg:
            return cls(kind, n=int(arg))
        if kind in ("CS", "AS") and arg:
            return cls(kind, threshold_s=float(arg))
        raise ValueError(f"bad policy {text!r}")

    def __str__(self):
        if self.kind == "FC":
            return "FC"
        if self.kind in ("CS", "AS"):
            return f"{self.kind}:{self.threshold_s:g}"
        name = "FixedN" if self.kind == "FIXEDN" else self.kind
        return f"{name}:{self.n}"


@dataclass
class ScheduleDecision:
    scheduled: tuple[int, ...]
    allocation: AllocationResult
    K_hat: int | None = None
    C_value: float | None = None
    budget_exhausted: bool = False
    threshold_violated: bool = False
    # (set size, t*, C) after each accepted or rejected greedy step, FC only
    trace: list = field(default_factory=list, repr=False)


def _greedy_next(current: list[int], remaining: list[int], obs: RoundState,
                 profiles: Sequence[DeviceProfile], radio: RadioConfig,
                 eps: float) -> tuple[int, float]:
    """Device whose addition gives the smallest ``t*``; ties go to the lowest id."""
    if not current:
        power = np.array([profiles[i].tx_power_w for i in remaining])
        lat = obs.comp_latency_s[remaining] + standalone_comm_s(
            obs.channel_gain_sq[remaining], power, radio)
        j = int(np.argmin(lat))
        return remaining[j], float(lat[j])
    sets = np.array([current + [i] for i in remaining], dtype=int)
    t = t_star_of_sets(sets, obs, profiles, radio, eps)
    j = int(np.argmin(t))
    return remaining[j], float(t[j])


def _k_hat_or_none(T, t_star):
    if T is None or math.isinf(T):
        return None, False
    return k_hat(T, t_star)


def schedule_fc(round_state: RoundState, profiles: Sequence[DeviceProfile], radio: RadioConfig,
                params: BoundParams, T: float, eps: float = DEFAULT_EPSILON) -> ScheduleDecision:
    """Greedy fast-converge scheduling.

    Starts from the single fastest device, then keeps adding the device that
    least increases ``t*`` while the objective ``C`` does not increase.
    """
    if not T > 0 or math.isinf(T):
        raise ValueError("FC needs a finite positive time budget")
    obs = round_state.observed()
    remaining = list(range(obs.num_devices))
    x, _ = _greedy_next([], remaining, obs, profiles, radio, eps)
    chosen = [x]
    remaining.remove(x)
    alloc = optimal_allocation(chosen, obs, profiles, radio, eps)
    K, exhausted = k_hat(T, alloc.t_star_s)
    C = objective_C(K, 1, params)
    trace = [(1, alloc.t_star_s, C)]
    while remaining:
        x, _ = _greedy_next(chosen, remaining, obs, profiles, radio, eps)
        cand = optimal_allocation(chosen + [x], obs, profiles, radio, eps)
        K2, exhausted2 = k_hat(T, cand.t_star_s)
        C2 = objective_C(K2, len(chosen) + 1, params)
        trace.append((len(chosen) + 1, cand.t_star_s, C2))
        if C2 > C:
            break
        chosen.append(x)
        remaining.remove(x)
        alloc, K, C, exhausted = cand, K2, C2, exhausted2
    return ScheduleDecision(tuple(chosen), alloc, K, C, exhausted, trace=trace)


def greedy_latency_order(n: int, round_state: RoundState, profiles: Sequence[DeviceProfile],
                         radio: RadioConfig, eps: float = DEFAULT_EPSILON) -> list[int]:
    """First ``n`` devices picked by the FC greedy rule, without the stopping test."""
    obs = round_state.observed()
    m = obs.num_devices
    if n == m:
        return list(range(m))  # the full set does not depend on the order
    chosen: list[int] = []
    remaining = list(range(m))
    while len(chosen) < n:
        x, _ = _greedy_next(chosen, remaining, obs, profiles, radio, eps)
        chosen.append(x)
        remaining.remove(x)
    return chosen


def schedule_fixed(policy: PolicySpec, round_state: RoundState,
                   profiles: Sequence[DeviceProfile], radio: RadioConfig,
                   rng: np.random.Generator | None = None, eps: float = DEFAULT_EPSILON,
                   T: float | None = None, params: BoundParams | None = None) -> ScheduleDecision:
    """FixedN (greedy order), RD (uniform subset) or PF (best channels) with ``n`` devices."""
    obs = round_state.observed()
    m = obs.num_devices
    n = policy.n
    if not 1 <= n <= m:
        raise ValueError(f"n={n} outside [1, {m}]")
    if policy.kind == "RD":
        if rng is None:
            raise ValueError("RD needs an rng")
        chosen = sorted(int(i) for i in rng.choice(m, size=n, replace=False))
    elif policy.kind == "PF":
        order = np.lexsort((np.arange(m), -obs.channel_gain_sq))
        chosen = sorted(int(i) for i in order[:n])
    elif policy.kind == "FIXEDN":
        chosen = greedy_latency_order(n, round_state, profiles, radio, eps)
    else:
        raise ValueError(f"schedule_fixed does not handle {policy.kind}")
    alloc = optimal_allocation(chosen, obs, profiles, radio, eps)
    K, exhausted = _k_hat_or_none(T, alloc.t_star_s)
    C = None
    if policy.kind == "FIXEDN" and params is not None and K is not None:
        C = objective_C(K, len(chosen), params)
    return ScheduleDecision(tuple(chosen), alloc, K, C, exhausted)


def schedule_threshold(policy: PolicySpec, round_state: RoundState,
                       profiles: Sequence[DeviceProfile], radio: RadioConfig,
                       eps: float = DEFAULT_EPSILON, T: float | None = None) -> ScheduleDecision:
    """Deadline-driven baselines.

    CS adds the device with the smallest own finish time under an equal split
    of the band over the tentative set, and keeps the equal split. AS adds the
    device that least increases the optimally allocated ``t*``. Both stop
    before the round latency would exceed the threshold.
    """
    obs = round_state.observed()
    th = policy.threshold_s
    remaining = list(range(obs.num_devices))
    chosen: list[int] = []
    violated = False
    if policy.kind == "CS":
        while remaining:
            share = 1.0 / (len(chosen) + 1)
            own = finish_times(remaining, np.full(len(remaining), share), obs, profiles, radio)
            x = remaining[int(np.argmin(own))]
            t = finish_times(chosen + [x], np.full(len(chosen) + 1, share), obs,
                             profiles, radio).max()
            if t > th:
                break
            chosen.append(x)
            remaining.remove(x)
        if not chosen:
            violated = True
            own = finish_times(remaining, np.ones(len(remaining)), obs, profiles, radio)
            chosen = [remaining[int(np.argmin(own))]]
        alloc = equal_split(chosen, obs, profiles, radio)
    elif policy.kind == "AS":
        while remaining:
            x, t = _greedy_next(chosen, remaining, obs, profiles, radio, eps)
            if t > th:
                break
            chosen.append(x)
            remaining.remove(x)
        if not chosen:
            violated = True
            chosen = [_greedy_next([], remaining, obs, profiles, radio, eps)[0]]
        alloc = optimal_allocation(chosen, obs, profiles, radio, eps)
    else:
        raise ValueError(f"schedule_threshold does not handle {policy.kind}")
    K, exhausted = _k_hat_or_none(T, alloc.t_star_s)
    return ScheduleDecision(tuple(chosen), alloc, K, None, exhausted, violated)


def schedule(policy: PolicySpec, round_state: RoundState, profiles: Sequence[DeviceProfile],
             radio: RadioConfig, *, params: BoundParams | None = None, T: float | None = None,
             rng: np.random.Generator | None = None,
             eps: float = DEFAULT_EPSILON) -> ScheduleDecision:
    """Dispatch on ``policy.kind``."""
    if policy.kind == "FC":
        if params is None or T is None:
            raise ValueError("FC needs bound parameters and a time budget")
        return schedule_fc(round_state, profiles, radio, params, T, eps)
    if policy.kind in ("FIXEDN", "RD", "PF"):
        return schedule_fixed(policy, round_state, profiles, radio, rng, eps, T, params)
    return schedule_threshold(policy, round_state, profiles, radio, eps, T)
