"""Federated training loop under a time budget.

Each round: draw the radio/compute state, schedule, allocate bandwidth,
charge the round latency against the budget, run local SGD on the scheduled
devices, aggregate, and refresh the online estimates of the loss constants
that drive the FC scheduler.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .allocator import DEFAULT_EPSILON, finish_times
from .bound import BoundParams
from .datagen import Dataset
from .models import Model
from .scheduler import PolicySpec, schedule
from .wireless import DeviceProfile, RadioConfig, sample_round

_MIN_STEP_NORM = 1e-12


def local_update(w0: np.ndarray, data: Dataset, model: Model, eta: float, tau: int,
                 batch_size: int, rng: np.random.Generator) -> np.ndarray:
    """``tau`` SGD steps from ``w0``.

    Each step uses a fresh mini-batch drawn without replacement; a batch as
    large as the dataset is plain gradient descent and draws nothing.
    """
    n = len(data)
    if n == 0:
        raise ValueError("empty local dataset")
    if not 1 <= batch_size <= n:
        raise ValueError(f"batch size {batch_size} not in [1, {n}]")
    w = np.array(w0, dtype=float, copy=True)
    X, y = data.features, data.labels
    for _ in range(tau):
        if batch_size == n:
            gr = model.grad(w, X, y)
        else:
            idx = rng.choice(n, size=batch_size, replace=False)
            gr = model.grad(w, X[idx], y[idx])
        w -= eta * gr
    return w


def aggregate(local_models: Sequence[np.ndarray], dataset_sizes: Sequence[int]) -> np.ndarray:
    """Dataset-size weighted mean of the uploaded models."""
    if len(local_models) == 0:
        raise ValueError("nothing to aggregate")
    sizes = np.asarray(dataset_sizes, dtype=float)
    return sizes @ np.asarray(local_models) / sizes.sum()


def estimate_rho_beta(w_prev: np.ndarray, w_i: np.ndarray, model: Model,
                      data: Dataset) -> tuple[float, float] | None:
    """Secant estimates of the Lipschitz and smoothness constants.

    Full-batch loss and gradient at both end points. Returns ``None`` (keep
    the previous estimates) when the two models coincide.
    """
    step = float(np.linalg.norm(w_prev - w_i))
    if step < _MIN_STEP_NORM:
        return None
    f0, g0 = model.loss_and_grad(w_prev, data.features, data.labels)
    f1, g1 = model.loss_and_grad(w_i, data.features, data.labels)
    return abs(f0 - f1) / step, float(np.linalg.norm(g0 - g1)) / step


def server_grad_estimate(w_prev: np.ndarray, w_i: np.ndarray, tau: int, eta: float) -> np.ndarray:
    """Average local gradient recovered from the model difference."""
    if not tau * eta > 0:
        raise ValueError("tau * eta must be positive")
    return (w_prev - w_i) / (tau * eta)


def update_delta(grad_estimates: Sequence[np.ndarray], dataset_sizes: Sequence[int]) -> np.ndarray:
    """Distance of each device's gradient estimate from their weighted mean."""
    G = np.asarray(grad_estimates, dtype=float)
    if G.shape[0] == 0:
        raise ValueError("no gradient estimates")
    mean = aggregate(G, dataset_sizes)
    return np.linalg.norm(G - mean, axis=1)


@dataclass
class EstimatorState:
    rho_i: np.ndarray
    beta_i: np.ndarray
    delta_i: np.ndarray
    last_updated_round: np.ndarray

    @classmethod
    def initial(cls, M: int, rho: float = 1.5, beta: float = 12.0, delta: float = 2.0):
        return cls(np.full(M, float(rho)), np.full(M, float(beta)), np.full(M, float(delta)),
                   np.full(M, -1, dtype=int))

    def weighted(self, sizes: np.ndarray) -> tuple[float, float, float]:
        w = np.asarray(sizes, dtype=float) / np.sum(sizes)
        return float(w @ self.rho_i), float(w @ self.beta_i), float(w @ self.delta_i)


@dataclass
class GlobalState:
    w: np.ndarray
    w_best: np.ndarray
    best_loss: float = math.inf
    elapsed_s: float = 0.0
    round: int = 0


@dataclass
class Federation:
    """Everything static about one simulated deployment."""

    devices: list[Dataset]
    profiles: list[DeviceProfile]
    radio: RadioConfig
    model: Model
    test: Dataset | None = None

    def __post_init__(self):
        if len(self.devices) != len(self.profiles):
            raise ValueError("one profile per device dataset")
        for ds, prof in zip(self.devices, self.profiles):
            if len(ds) != prof.dataset_size:
                raise ValueError(f"device {prof.id}: profile size does not match its data")

    @property
    def dataset_sizes(self) -> np.ndarray:
        return np.array([len(d) for d in self.devices])

    def global_loss(self, w: np.ndarray) -> float:
        """Dataset-size weighted mean of all local losses."""
        sizes = self.dataset_sizes
        losses = np.array([self.model.loss(w, d.features, d.labels) for d in self.devices])
        return float(sizes @ losses / sizes.sum())


@dataclass
class TrainingConfig:
    T_s: float = 60.0
    eta: float = 0.01
    tau: int = 5
    phi: float = 0.05
    epsilon_alloc: float = DEFAULT_EPSILON
    radius_m: float = 600.0
    min_dist_m: float = 1.0
    error_rel_std: float = 0.0
    fading: bool = False
    khat_remaining: bool = False
    max_rounds: int | None = None
    init_rho: float = 1.5
    init_beta: float = 12.0
    init_delta: float = 2.0


@dataclass
class RoundRecord:
    round: int
    scheduled: tuple[int, ...]
    t_star_s: float
    cumulative_s: float
    K_hat: int | None
    C_value: float | None
    global_loss: float
    true_global_loss: float
    test_accuracy: float
    rho_hat: float
    beta_hat: float
    delta_hat: float
    budget_exhausted: bool = False
    threshold_violated: bool = False

    @property
    def n_scheduled(self) -> int:
        return len(self.scheduled)


@dataclass
class TrainingHistory:
    records: list[RoundRecord]
    state: GlobalState
    estimators: EstimatorState
    policy: PolicySpec
    aborted_round_s: float | None = None  # latency of the round that broke the budget

    def __len__(self):
        return len(self.records)

    @property
    def best_accuracy(self) -> float:
        acc = [r.test_accuracy for r in self.records if not math.isnan(r.test_accuracy)]
        return max(acc) if acc else math.nan

    @property
    def best_true_loss(self) -> float:
        return min((r.true_global_loss for r in self.records), default=math.nan)


STREAM_KEYS = ("placement", "channel", "compute", "policy", "sgd", "estimation")


def run_training(fed: Federation, cfg: TrainingConfig, policy: PolicySpec,
                 streams: Mapping[str, np.random.Generator],
                 w0: np.ndarray | None = None) -> TrainingHistory:
    """Train until the time budget (or ``max_rounds``) runs out.

    ``streams`` maps each of :data:`STREAM_KEYS` to its own generator. The
    initial model comes from the ``sgd`` stream unless ``w0`` is given.

    The loss used to track the best model is the one the server can observe:
    the scheduled devices' weighted loss at the model they received. Test
    accuracy and the all-device loss are logged for the freshly aggregated
    model.
    """
    missing = [k for k in STREAM_KEYS if k not in streams]
    if missing:
        raise ValueError(f"missing rng streams: {missing}")
    model = fed.model
    M = len(fed.devices)
    sizes = fed.dataset_sizes
    if w0 is None:
        w0 = model.init(streams["sgd"])
    state = GlobalState(np.array(w0, dtype=float), np.array(w0, dtype=float))
    est = EstimatorState.initial(M, cfg.init_rho, cfg.init_beta, cfg.init_delta)
    history = TrainingHistory([], state, est, policy)

    k = 0
    while cfg.max_rounds is None or k < cfg.max_rounds:
        k += 1
        rs = sample_round(k, fed.profiles, fed.radio, cfg.tau,
                          radius_m=cfg.radius_m, min_dist_m=cfg.min_dist_m,
                          placement_rng=streams["placement"], compute_rng=streams["compute"],
                          channel_rng=streams["channel"], estimation_rng=streams["estimation"],
                          error_rel_std=cfg.error_rel_std, fading=cfg.fading)
        rho, beta, delta = est.weighted(sizes)
        params = BoundParams(rho, beta, est.delta_i.copy(), cfg.eta, cfg.tau, cfg.phi, sizes)
        budget = cfg.T_s - state.elapsed_s if cfg.khat_remaining else cfg.T_s
        decision = schedule(policy, rs, fed.profiles, fed.radio, params=params, T=budget,
                            rng=streams["policy"], eps=cfg.epsilon_alloc)
        alloc = decision.allocation
        if cfg.error_rel_std > 0:
            t_round = float(finish_times(alloc.scheduled, alloc.gamma, rs,
                                         fed.profiles, fed.radio).max())
        else:
            t_round = alloc.t_star_s
        if state.elapsed_s + t_round > cfg.T_s:
            history.aborted_round_s = t_round
            break
        state.elapsed_s += t_round
        state.round = k

        w_prev = state.w
        members = sorted(decision.scheduled)
        locals_, grads, f_prev = [], [], []
        for i in members:
            data = fed.devices[i]
            w_i = local_update(w_prev, data, model, cfg.eta, cfg.tau,
                               fed.profiles[i].batch_size, streams["sgd"])
            f_prev.append(model.loss(w_prev, data.features, data.labels))
            rb = estimate_rho_beta(w_prev, w_i, model, data)
            if rb is not None:
                est.rho_i[i], est.beta_i[i] = rb
            locals_.append(w_i)
            grads.append(server_grad_estimate(w_prev, w_i, cfg.tau, cfg.eta))
        member_sizes = sizes[members]
        state.w = aggregate(locals_, member_sizes)
        est.delta_i[members] = update_delta(grads, member_sizes)
        est.last_updated_round[members] = k

        observed_loss = float(member_sizes @ np.array(f_prev) / member_sizes.sum())
        if observed_loss < state.best_loss:
            state.best_loss = observed_loss
            state.w_best = w_prev.copy()

        true_loss = fed.global_loss(state.w)
        acc = math.nan
        if fed.test is not None:
            acc = model.accuracy(state.w, fed.test.features, fed.test.labels)
        history.records.append(RoundRecord(
            k, decision.scheduled, t_round, state.elapsed_s, decision.K_hat, decision.C_value,
            observed_loss, true_loss, acc, rho, beta, delta,
            decision.budget_exhausted, decision.threshold_violated))
    return history
