"""Convergence-bound arithmetic behind the fast-converge scheduler.

The scheduler minimises ``C = eps0(K, B(n)) + rho * h(tau) + B(n)`` where
``B(n)`` penalises partial participation and ``eps0`` couples the bound terms
with the number of rounds ``K`` that fit in the time budget.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

BETA_FLOOR = 1e-6


def _growth(eta: float, beta: float, x) -> np.ndarray:
    # (eta*beta + 1)**x - 1 without overflow or cancellation
    with np.errstate(over="ignore"):
        return np.expm1(np.asarray(x, dtype=float) * math.log1p(eta * beta))


def g(delta_i, beta: float, eta: float, x):
    """Per-device local drift ``(delta_i / beta) ((eta beta + 1)^x - 1)``."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    out = np.asarray(delta_i, dtype=float) / beta * _growth(eta, beta, x)
    return float(out) if out.ndim == 0 else out


def _excess_growth(a: float, x: float) -> float:
    # (1 + a)^x - 1 - a x; integer x uses the binomial tail so x = 0, 1 give 0 exactly
    if float(x).is_integer() and 0 <= x <= 512:
        n = int(x)
        total, term = 0.0, 1.0
        for k in range(1, n + 1):
            term *= a * (n - k + 1) / k
            if k >= 2:
                total += term
        return total
    with np.errstate(over="ignore"):
        return float(np.expm1(x * math.log1p(a))) - a * x


def h(delta: float, beta: float, eta: float, x) -> float:
    """``(delta / beta)((eta beta + 1)^x - 1) - eta delta x``; zero at x = 0 and 1."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    return delta / beta * _excess_growth(eta * beta, x)


@dataclass(frozen=True)
class BoundParams:
    """Snapshot of the estimated loss constants plus the fixed knobs.

    ``beta`` is floored at ``BETA_FLOOR`` so that noisy estimates never divide
    by zero.
    """

    rho: float
    beta: float
    delta_i: np.ndarray
    eta: float
    tau: int
    phi: float
    dataset_sizes: np.ndarray
    delta: float = field(init=False)
    d_min: int = field(init=False)
    d_total: int = field(init=False)

    def __post_init__(self):
        sizes = np.asarray(self.dataset_sizes)
        delta_i = np.asarray(self.delta_i, dtype=float)
        if delta_i.shape != sizes.shape:
            raise ValueError("delta_i and dataset_sizes must align")
        if len(sizes) < 2:
            raise ValueError("need at least two devices")
        if not (self.eta > 0 and self.tau >= 1 and self.phi > 0 and self.rho >= 0):
            raise ValueError("need eta > 0, tau >= 1, phi > 0, rho >= 0")
        if np.any(delta_i < 0) or np.any(sizes <= 0):
            raise ValueError("delta_i must be >= 0 and dataset sizes > 0")
        object.__setattr__(self, "delta_i", delta_i)
        object.__setattr__(self, "dataset_sizes", sizes)
        object.__setattr__(self, "beta", max(float(self.beta), BETA_FLOOR))
        object.__setattr__(self, "d_total", int(sizes.sum()))
        object.__setattr__(self, "d_min", int(sizes.min()))
        object.__setattr__(self, "delta", float(np.dot(sizes, delta_i) / sizes.sum()))

    @property
    def num_devices(self) -> int:
        return len(self.dataset_sizes)


def participation_constant(p: BoundParams) -> float:
    """The set-independent factor ``A`` of the partial-participation bound."""
    m = p.num_devices
    d = p.dataset_sizes.astype(float)
    g2 = g(p.delta_i, p.beta, p.eta, p.tau) ** 2
    w = d**2
    # sum_i sum_j D_i^2 D_j^2 (g_i^2 + g_j^2)
    double_sum = np.sum(np.outer(w, w) * (g2[:, None] + g2[None, :]))
    return p.beta * double_sum / (2.0 * m * (m - 1) * float(p.d_min) ** 2 * float(p.d_total) ** 2)


def B_pi(n_scheduled: int, p: BoundParams) -> float:
    """Expected loss gap from scheduling ``n`` of ``M`` devices; zero at ``n = M``."""
    m = p.num_devices
    if not 1 <= n_scheduled <= m:
        raise ValueError(f"n_scheduled must be in [1, {m}], got {n_scheduled}")
    if n_scheduled == m:
        return 0.0
    return (m - n_scheduled) / n_scheduled * participation_constant(p)


def epsilon0(K: int, bpi: float, p: BoundParams) -> float:
    if K < 1:
        raise ValueError("K must be >= 1")
    a = p.eta * p.phi * K * p.tau
    gap = p.rho * h(p.delta, p.beta, p.eta, p.tau) + bpi
    return (1.0 + math.sqrt(1.0 + 4.0 * a * K * gap)) / (2.0 * a)


def objective_C(K_hat: int, n_scheduled: int, p: BoundParams) -> float:
    """Myopic scheduling objective for ``n`` devices and ``K_hat`` rounds."""
    if K_hat < 1:
        raise ValueError("K_hat must be >= 1; clamp floor(T / t*) before calling")
    bpi = B_pi(n_scheduled, p)
    return epsilon0(K_hat, bpi, p) + p.rho * h(p.delta, p.beta, p.eta, p.tau) + bpi


def k_hat(T: float, t_star: float) -> tuple[int, bool]:
    """``floor(T / t*)`` clamped to at least 1; the flag marks the clamp."""
    if math.isinf(T):
        raise ValueError("K_hat is undefined for an unbounded time budget")
    k = math.floor(T / t_star)
    if k < 1:
        return 1, True
    return int(k), False
