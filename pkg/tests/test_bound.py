import math

import numpy as np
import pytest

from fedsched.bound import (BETA_FLOOR, B_pi, BoundParams, epsilon0, g, h, k_hat,
                            objective_C, participation_constant)


def params(m=10, delta=2.0, beta=12.0, rho=1.5, eta=0.01, tau=5, phi=0.05, sizes=100):
    return BoundParams(rho, beta, np.full(m, delta), eta, tau, phi,
                       np.broadcast_to(np.asarray(sizes), (m,)))


def test_g_and_h_reference_values():
    # (1.12^5 - 1) / 6 and minus 0.01 * 2 * 5
    assert g(2.0, 12.0, 0.01, 5) == pytest.approx(0.1270569472, rel=1e-9)
    assert h(2.0, 12.0, 0.01, 5) == pytest.approx(0.0270569472, rel=1e-9)


def test_g_and_h_exact_zeros():
    assert g(2.0, 12.0, 0.01, 0) == 0.0
    assert h(2.0, 12.0, 0.01, 0) == 0.0
    assert h(2.0, 12.0, 0.01, 1) == 0.0


def test_h_nonnegative_and_increasing():
    vals = [h(1.0, 5.0, 0.05, x) for x in range(1, 40)]
    assert all(v >= 0 for v in vals)
    assert np.all(np.diff(vals) > 0)


def test_h_non_integer_matches_closed_form():
    x, d, b, e = 2.5, 2.0, 12.0, 0.01
    ref = d / b * ((e * b + 1) ** x - 1) - e * d * x
    assert h(d, b, e, x) == pytest.approx(ref, rel=1e-10)


def test_b_pi_full_participation_is_zero():
    p = params()
    assert B_pi(p.num_devices, p) == 0.0


def test_b_pi_decreasing_in_n():
    p = params(m=20)
    vals = [B_pi(n, p) for n in range(1, 21)]
    assert np.all(np.diff(vals) < 0)


def test_participation_constant_brute_force():
    rng = np.random.default_rng(0)
    m = 6
    sizes = rng.integers(50, 200, size=m)
    delta_i = rng.uniform(0.1, 3.0, size=m)
    p = BoundParams(1.0, 8.0, delta_i, 0.02, 4, 0.1, sizes)
    gi = g(delta_i, 8.0, 0.02, 4)
    total = sum(sizes[i] ** 2 * sizes[j] ** 2 * (gi[i] ** 2 + gi[j] ** 2)
                for i in range(m) for j in range(m))
    ref = 8.0 * total / (2 * m * (m - 1) * sizes.min() ** 2 * sizes.sum() ** 2)
    assert participation_constant(p) == pytest.approx(ref, rel=1e-12)


def test_epsilon0_solves_its_defining_equation():
    p = params()
    for K in (1, 10, 200):
        for bpi in (0.0, 0.3):
            e = epsilon0(K, bpi, p)
            gap = p.rho * h(p.delta, p.beta, p.eta, p.tau) + bpi
            assert 1 / e == pytest.approx(K * (p.eta * p.phi * p.tau - gap / e ** 2), rel=1e-10)


def test_objective_trades_rounds_against_participation():
    p = params(m=20)
    # more rounds help at fixed n; full participation beats one device at equal K
    assert objective_C(100, 5, p) < objective_C(10, 5, p)
    assert objective_C(50, 20, p) < objective_C(50, 1, p)


def test_k_hat_floor_and_clamp():
    assert k_hat(60.0, 0.7) == (85, False)
    assert k_hat(1.0, 2.0) == (1, True)
    with pytest.raises(ValueError):
        k_hat(math.inf, 1.0)


def test_beta_floor_and_validation():
    p = BoundParams(1.0, 0.0, np.ones(3), 0.01, 5, 0.05, np.full(3, 10))
    assert p.beta == BETA_FLOOR
    with pytest.raises(ValueError):
        BoundParams(1.0, 1.0, np.ones(1), 0.01, 5, 0.05, np.full(1, 10))
    with pytest.raises(ValueError):
        objective_C(0, 1, params())
