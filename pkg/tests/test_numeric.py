import math

import numpy as np
import pytest
from scipy import special

from fedsched.numeric import (INV_E, BracketError, Branch, LambertWDomainError, _lambert_w,
                              bisect_monotone, lambert_w)


@pytest.mark.parametrize("branch,k", [(Branch.PRINCIPAL, 0), (Branch.SECONDARY, -1)])
def test_matches_scipy(branch, k):
    # within ~1e-8 of -1/e the problem is ill-conditioned; the residual test covers it
    rng = np.random.default_rng(1)
    x = np.concatenate([-INV_E + np.logspace(-8, -1, 200), rng.uniform(-INV_E + 1e-8, -1e-3, 2000)])
    if branch is Branch.PRINCIPAL:
        x = np.concatenate([x, rng.uniform(0, 50, 500), np.logspace(-300, 300, 200)])
    else:
        x = np.concatenate([x, -np.logspace(-300, -1, 200)])
    np.testing.assert_allclose(lambert_w(branch, x), special.lambertw(x, k).real, rtol=1e-12)


@pytest.mark.parametrize("branch", list(Branch))
def test_residual_near_branch_point(branch):
    x = -INV_E + np.logspace(-16, -6, 300)
    w = lambert_w(branch, x)
    np.testing.assert_allclose(w * np.exp(w), x, rtol=1e-15, atol=0)
    assert np.all(w <= -1.0) if branch is Branch.SECONDARY else np.all(w >= -1.0)


def test_known_values():
    assert lambert_w(Branch.PRINCIPAL, 0.0) == 0.0
    assert lambert_w(Branch.PRINCIPAL, math.e) == pytest.approx(1.0, rel=1e-15)
    assert lambert_w(Branch.SECONDARY, -2 * math.exp(-2)) == pytest.approx(-2.0, rel=1e-14)
    omega = 0.5671432904097838
    assert lambert_w(Branch.PRINCIPAL, 1.0) == pytest.approx(omega, rel=1e-15)


def test_branch_ordering():
    x = np.linspace(-INV_E * 0.999, -1e-6, 500)
    assert np.all(lambert_w(Branch.SECONDARY, x) < -1.0)
    assert np.all(lambert_w(Branch.PRINCIPAL, x) > -1.0)


def test_scalar_in_scalar_out():
    assert isinstance(lambert_w(Branch.PRINCIPAL, 1.0), float)
    assert lambert_w(Branch.PRINCIPAL, np.array([1.0, 2.0])).shape == (2,)


def test_branch_point_both_branches():
    for branch in Branch:
        assert lambert_w(branch, -INV_E) == pytest.approx(-1.0, abs=1e-8)
        assert lambert_w(branch, -math.exp(-1)) == pytest.approx(-1.0, abs=1e-8)


@pytest.mark.parametrize("branch,x", [
    (Branch.PRINCIPAL, -0.5), (Branch.SECONDARY, -0.5), (Branch.SECONDARY, 0.0),
    (Branch.SECONDARY, 1.0), (Branch.PRINCIPAL, math.nan), (Branch.PRINCIPAL, math.inf),
])
def test_domain_errors(branch, x):
    with pytest.raises(LambertWDomainError):
        lambert_w(branch, x)


def test_bisection_fallback_alone_is_accurate():
    x = np.array([-0.3678, -0.2, -1e-3, 0.5, 10.0])
    w = _lambert_w(Branch.PRINCIPAL, x, max_iter=0)
    np.testing.assert_allclose(w, special.lambertw(x, 0).real, rtol=1e-12)
    xs = x[x < 0]
    w = _lambert_w(Branch.SECONDARY, xs, max_iter=0)
    np.testing.assert_allclose(w, special.lambertw(xs, -1).real, rtol=1e-12)


def test_bisect_monotone_increasing_and_decreasing():
    assert bisect_monotone(lambda t: t * t - 2, 0.0, 2.0, 1e-12) == pytest.approx(math.sqrt(2), abs=1e-11)
    assert bisect_monotone(lambda t: 1 - t, 0.0, 3.0, 1e-12) == pytest.approx(1.0, abs=1e-11)


def test_bisect_monotone_needs_sign_change():
    with pytest.raises(BracketError):
        bisect_monotone(lambda t: t + 1, 0.0, 1.0, 1e-6)
