import itertools
import math

import numpy as np
import pytest

from fedsched.allocator import finish_times, optimal_allocation, standalone_latency
from fedsched.bound import BoundParams, objective_C
from fedsched.scheduler import (PolicySpec, greedy_latency_order, schedule, schedule_fc,
                                schedule_fixed, schedule_threshold)
from fedsched.wireless import RoundState

from _instances import random_instance


def bound_params(m, rho=1.5, beta=12.0, delta=2.0):
    return BoundParams(rho, beta, np.full(m, delta), 0.01, 5, 0.05, np.full(m, 100))


@pytest.mark.parametrize("text,kind,n,th,back", [
    ("FC", "FC", None, None, "FC"),
    ("fixedn:5", "FIXEDN", 5, None, "FixedN:5"),
    ("RD:3", "RD", 3, None, "RD:3"),
    ("PF:2", "PF", 2, None, "PF:2"),
    ("CS:0.4", "CS", None, 0.4, "CS:0.4"),
    ("AS-h", "AS", None, 1.5, "AS:1.5"),
])
def test_policy_parse(text, kind, n, th, back):
    p = PolicySpec.parse(text)
    assert (p.kind, p.n, p.threshold_s, str(p)) == (kind, n, th, back)


@pytest.mark.parametrize("text", ["FixedN", "FC:3", "XX:1", "CS:-1", "RD:0"])
def test_policy_parse_errors(text):
    with pytest.raises(ValueError):
        PolicySpec.parse(text)


def test_fc_first_pick_is_fastest_standalone():
    rs, profs, rad = random_instance(np.random.default_rng(0), 8)
    lat = [standalone_latency(i, rs, profs, rad) for i in range(8)]
    order = greedy_latency_order(3, rs, profs, rad)
    assert order[0] == int(np.argmin(lat))


def test_fc_trace_and_stopping_rule():
    rng = np.random.default_rng(1)
    for _ in range(20):
        rs, profs, rad = random_instance(rng, 8)
        d = schedule_fc(rs, profs, rad, bound_params(8), T=60.0)
        sizes = [s for s, _, _ in d.trace]
        assert sizes == list(range(1, len(sizes) + 1))
        n = len(d.scheduled)
        accepted = [c for s, _, c in d.trace if s <= n]
        assert np.all(np.diff(accepted) <= 0)
        if n < 8:
            assert d.trace[-1][2] > d.C_value
        assert d.C_value == objective_C(d.K_hat, n, bound_params(8))


def test_fc_matches_fixed_n_prefix():
    rs, profs, rad = random_instance(np.random.default_rng(2), 10)
    d = schedule_fc(rs, profs, rad, bound_params(10), T=60.0)
    n = len(d.scheduled)
    assert list(d.scheduled) == greedy_latency_order(n, rs, profs, rad) or n == 10


def test_fc_single_device_when_rounds_dominate():
    # a budget just over K rounds of the fastest device: adding anyone drops K_hat
    rs, profs, rad = random_instance(np.random.default_rng(3), 6)
    t1 = optimal_allocation([greedy_latency_order(1, rs, profs, rad)[0]], rs, profs, rad).t_star_s
    T = 3 * t1 * (1 + 1e-12)
    params = bound_params(6, delta=1e-3)
    fc = schedule_fc(rs, profs, rad, params, T)
    fixed = schedule_fixed(PolicySpec("FIXEDN", 1), rs, profs, rad)
    assert fc.scheduled == fixed.scheduled


def test_fc_schedules_everyone_when_participation_dominates():
    rs, profs, rad = random_instance(np.random.default_rng(4), 6)
    fc = schedule_fc(rs, profs, rad, bound_params(6, delta=50.0), T=1e4)
    assert len(fc.scheduled) == 6


def test_fc_needs_finite_budget():
    rs, profs, rad = random_instance(np.random.default_rng(0), 3)
    with pytest.raises(ValueError):
        schedule_fc(rs, profs, rad, bound_params(3), math.inf)


def test_fc_greedy_against_exhaustive_same_size():
    rng = np.random.default_rng(5)
    for _ in range(10):
        m = int(rng.integers(3, 9))
        rs, profs, rad = random_instance(rng, m)
        d = schedule_fc(rs, profs, rad, bound_params(m), T=30.0)
        n = len(d.scheduled)
        best = min(optimal_allocation(s, rs, profs, rad).t_star_s
                   for s in itertools.combinations(range(m), n))
        assert d.allocation.t_star_s <= best * 1.10


def test_rd_uses_rng_and_pf_picks_best_channels():
    rs, profs, rad = random_instance(np.random.default_rng(6), 10)
    a = schedule_fixed(PolicySpec("RD", 4), rs, profs, rad, np.random.default_rng(1))
    b = schedule_fixed(PolicySpec("RD", 4), rs, profs, rad, np.random.default_rng(1))
    assert a.scheduled == b.scheduled and len(set(a.scheduled)) == 4
    pf = schedule_fixed(PolicySpec("PF", 3), rs, profs, rad)
    assert set(pf.scheduled) == set(np.argsort(-rs.channel_gain_sq)[:3].tolist())


def test_fixed_n_full_set():
    rs, profs, rad = random_instance(np.random.default_rng(7), 5)
    d = schedule_fixed(PolicySpec("FIXEDN", 5), rs, profs, rad, T=10.0, params=bound_params(5))
    assert d.scheduled == (0, 1, 2, 3, 4)
    assert d.C_value is not None and d.K_hat >= 1
    assert schedule_fixed(PolicySpec("FIXEDN", 5), rs, profs, rad).K_hat is None


@pytest.mark.parametrize("kind", ["CS", "AS"])
def test_threshold_policies_respect_deadline(kind):
    rng = np.random.default_rng(8)
    for th in (0.8, 1.5, 3.0):
        rs, profs, rad = random_instance(rng, 10)
        d = schedule_threshold(PolicySpec(kind, threshold_s=th), rs, profs, rad)
        if not d.threshold_violated:
            assert d.allocation.t_star_s <= th
        ft = finish_times(d.scheduled, d.allocation.gamma, rs, profs, rad)
        assert ft.max() == pytest.approx(d.allocation.t_star_s, rel=1e-9)


def test_threshold_violation_flag():
    rs, profs, rad = random_instance(np.random.default_rng(9), 4)
    d = schedule_threshold(PolicySpec("AS", threshold_s=1e-3), rs, profs, rad)
    assert d.threshold_violated and len(d.scheduled) == 1


def test_as_schedules_at_least_as_many_as_cs():
    rng = np.random.default_rng(10)
    for _ in range(10):
        rs, profs, rad = random_instance(rng, 10)
        cs = schedule_threshold(PolicySpec("CS", threshold_s=1.5), rs, profs, rad)
        as_ = schedule_threshold(PolicySpec("AS", threshold_s=1.5), rs, profs, rad)
        assert len(as_.scheduled) >= len(cs.scheduled)


def test_policies_decide_on_observed_state():
    rs, profs, rad = random_instance(np.random.default_rng(11), 5)
    fake = rs.comp_latency_s.copy()
    fake[4] = 1e-3  # controller believes device 4 is fastest
    noisy = RoundState(0, rs.distances_m, rs.channel_gain_sq, rs.comp_latency_s,
                       rs.channel_gain_sq, fake)
    d = schedule(PolicySpec("FIXEDN", 1), noisy, profs, rad)
    assert d.scheduled == (4,)
