"""Real Lambert-W branches and a guarded bisection solver.

``lambert_w`` accepts scalars or arrays. The allocator evaluates it on whole
vectors of devices at once, so the Halley iteration runs elementwise with a
per-element convergence mask.
"""
from __future__ import annotations

import enum
import math

import numpy as np

# 1/e split into a double and its rounding error, so that x + 1/e is exact
# enough to resolve points very close to the branch point.
_INV_E_HI = 0.36787944117144233
_INV_E_LO = -1.2428753672788363e-17
INV_E = _INV_E_HI

_MAX_HALLEY = 50
_EPS = np.finfo(float).eps


class Branch(enum.Enum):
    """Real branch of the Lambert-W function."""

    PRINCIPAL = 0   # W0, x >= -1/e, values >= -1
    SECONDARY = -1  # W-1, -1/e <= x < 0, values <= -1


class LambertWDomainError(ValueError):
    pass


class BracketError(ValueError):
    pass


def bisect_monotone(f, lo: float, hi: float, tol: float) -> float:
    """Root of a monotone ``f`` bracketed by ``[lo, hi]``.

    ``f(lo)`` and ``f(hi)`` must have strictly opposite signs (the decreasing
    pattern ``f(lo) > 0 > f(hi)`` is the usual one). The loop runs at most
    ``ceil(log2((hi - lo) / tol))`` times and the returned point lies in a
    bracket of width ``<= tol``.
    """
    if not lo < hi:
        raise BracketError(f"need lo < hi, got [{lo}, {hi}]")
    if not tol > 0:
        raise BracketError(f"tol must be positive, got {tol}")
    flo = f(lo)
    fhi = f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if not (flo > 0 > fhi or flo < 0 < fhi):
        raise BracketError(f"no sign change on [{lo}, {hi}]: f(lo)={flo}, f(hi)={fhi}")
    lo_positive = flo > 0
    n_iter = max(0, math.ceil(math.log2((hi - lo) / tol)))
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break  # bracket at float resolution
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == lo_positive:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _shift_from_branch_point(x: np.ndarray) -> np.ndarray:
    # x + 1/e, with the low part of 1/e restored
    return (x + _INV_E_HI) + _INV_E_LO


def _initial_guess(branch: Branch, x: np.ndarray, dist: np.ndarray) -> np.ndarray:
    # Series in p = +-sqrt(2(e x + 1)) near the branch point, asymptotic
    # log expansions elsewhere.
    p = np.sqrt(2.0 * math.e * np.maximum(dist, 0.0))
    w = np.empty_like(x)
    if branch is Branch.PRINCIPAL:
        near = x < -0.32
        pn = p[near]
        w[near] = -1.0 + pn - pn**2 / 3.0 + 11.0 / 72.0 * pn**3 - 43.0 / 540.0 * pn**4
        mid = ~near & (x <= 3.0)
        w[mid] = np.log1p(x[mid])
        far = x > 3.0
        l1 = np.log(x[far])
        l2 = np.log(l1)
        w[far] = l1 - l2 + l2 / l1
    else:
        near = x < -0.25
        pn = -p[near]
        w[near] = -1.0 + pn - pn**2 / 3.0 + 11.0 / 72.0 * pn**3 - 43.0 / 540.0 * pn**4
        far = ~near
        l1 = np.log(-x[far])
        l2 = np.log(-l1)
        w[far] = l1 - l2 + l2 / l1
    return w


def _halley(x: np.ndarray, w: np.ndarray, max_iter: int) -> tuple[np.ndarray, np.ndarray]:
    """Halley refinement of ``w``; returns (w, converged mask).

    Whole-array updates: converged entries only move by rounding noise.
    """
    done = np.zeros(x.shape, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for _ in range(max_iter):
            ew = np.exp(w)
            f = w * ew - x
            wp1 = w + 1.0
            denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
            dw = f / denom
            dw[~np.isfinite(dw)] = 0.0
            w = w - dw
            done = np.abs(dw) <= 4.0 * _EPS * (1.0 + np.abs(w))
            if done.all():
                break
    return w, done


def _bisect_fallback(branch: Branch, x: float) -> float:
    if branch is Branch.PRINCIPAL:
        lo, hi = -1.0, max(1.0, math.log(x)) if x > 0 else 0.0
        if hi == lo:
            return lo

        def g(w):
            return x - w * math.exp(w)
    else:
        u = -1.0 - math.log(-x)
        lo, hi = -2.0 - math.sqrt(2.0 * u) - u, -1.0

        def g(w):
            return w * math.exp(w) - x
    tol = 2.0 * _EPS * max(1.0, abs(lo))
    return bisect_monotone(g, lo, hi, tol)


def _lambert_w(branch: Branch, x, max_iter: int = _MAX_HALLEY):
    branch = Branch(branch)
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    xs = np.atleast_1d(arr).astype(float, copy=True)

    if np.isnan(xs).any():
        raise LambertWDomainError("lambert_w of NaN")
    dist = _shift_from_branch_point(xs)
    # a few ulps below -1/e is rounding noise in the caller's arithmetic
    below = dist < -8.0 * _EPS * _INV_E_HI
    if below.any():
        raise LambertWDomainError(
            f"lambert_w({branch.name}) needs x >= -1/e, got {xs[below][0]!r}")
    if branch is Branch.SECONDARY and (xs >= 0).any():
        raise LambertWDomainError(
            f"lambert_w(SECONDARY) needs x < 0, got {xs[xs >= 0][0]!r}")
    if branch is Branch.PRINCIPAL and np.isinf(xs).any():
        raise LambertWDomainError("lambert_w of inf")

    out = np.empty_like(xs)
    at_point = dist <= 0.0
    zero = xs == 0.0
    out[at_point] = -1.0
    out[zero] = 0.0
    work = ~(at_point | zero)
    if work.any():
        xw = xs[work]
        w0 = _initial_guess(branch, xw, dist[work])
        w, ok = _halley(xw, w0, max_iter)
        if not ok.all():
            for j in np.flatnonzero(~ok):
                w[j] = _bisect_fallback(branch, float(xw[j]))
        # clip rounding excursions across -1
        if branch is Branch.PRINCIPAL:
            w = np.maximum(w, -1.0)
        else:
            w = np.minimum(w, -1.0)
        out[work] = w
    if scalar:
        return float(out[0])
    return out.reshape(arr.shape)


def lambert_w(branch: Branch, x):
    """Real Lambert-W: the ``w`` on ``branch`` with ``w * exp(w) == x``.

    Works elementwise on arrays; a scalar input returns a float. Domain
    violations raise :class:`LambertWDomainError`.

    >>> lambert_w(Branch.PRINCIPAL, 0.0)
    0.0
    >>> lambert_w(Branch.SECONDARY, -INV_E)
    -1.0
    """
    return _lambert_w(branch, x)
