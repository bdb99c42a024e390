"""Experiment configuration, seeding, orchestration and CSV output.

Configs are flat UTF-8 ``key = value`` files with ``#`` comments. Every
random draw comes from a stream keyed by (master seed, trial, component), so
changing how much one component consumes never shifts another's draws.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import logging
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable

import numpy as np

from .datagen import (Dataset, PartitionSpec, load_idx_dataset, partition, synth_classification,
                      synth_regression)
from .fltrain import STREAM_KEYS, Federation, TrainingConfig, TrainingHistory, run_training
from .models import MODEL_KINDS, make_model
from .scheduler import PolicySpec
from .wireless import DeviceProfile, RadioConfig, dbm_to_watts, noise_density_from_dbm_per_mhz

log = logging.getLogger(__name__)

SEED_TAGS = ("placement", "channel", "compute", "data", "policy", "sgd", "estimation")
HISTORY_COLUMNS = ("trial", "round", "policy", "n_scheduled", "t_star_s", "cumulative_s",
                   "K_hat", "C_value", "global_loss", "true_global_loss", "test_accuracy",
                   "rho_hat", "beta_hat", "delta_hat")
SUMMARY_COLUMNS = ("trial", "policy", "rounds_completed", "best_accuracy", "best_loss",
                   "best_true_loss", "final_true_loss", "mean_n_scheduled", "mean_t_star_s",
                   "elapsed_s")
SWEEP_KEYS = ("phi", "R_m", "policy", "error_rel_std", "fixed_n")
SWEEP_COLUMNS = ("key", "value", "trials", "mean_best_accuracy", "std_best_accuracy",
                 "mean_best_true_loss", "mean_n_scheduled", "mean_t_star_s", "mean_rounds")
DATA_KINDS = ("synth_classification", "synth_regression", "idx")


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"config key {key!r}: {message}")
        self.key = key


@dataclass
class ExperimentConfig:
    # cell and radio
    M: int = 20
    R_m: float = 600.0
    min_dist_m: float = 1.0
    B_hz: float = 20e6
    N0_dbm_per_mhz: float = -114.0
    P_dbm: float = 10.0
    alpha: float = 3.76
    S_bits: float | None = None  # None: 32 bits per model parameter
    fading: bool = False
    # computation
    a_ms_per_sample: float = 0.5
    mu: float | None = None  # samples per ms; None: 1 / a
    # learning
    T_s: float = 60.0
    tau: int = 5
    eta: float = 0.01
    batch_size: int = 128
    phi: float = 0.05
    epsilon_alloc: float = 1e-4
    model: str = "mlp"
    hidden: int = 64
    svm_lambda: float = 1e-3
    init_rho: float = 1.5
    init_beta: float = 12.0
    init_delta: float = 2.0
    khat_mode: str = "full"
    max_rounds: int = 0  # 0: no cap
    # data
    data: str = "synth_classification"
    n_samples: int = 2000
    n_test: int = 500
    dims: int = 20
    classes: int = 10
    class_sep: float = 1.0
    noise_std: float = 0.1
    idx_train_images: str = ""
    idx_train_labels: str = ""
    idx_test_images: str = ""
    idx_test_labels: str = ""
    partition: str = "iid"
    # experiment
    policy: str = "FC"
    error_rel_std: float = 0.0
    trials: int = 5
    master_seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        positive = ("M", "R_m", "min_dist_m", "B_hz", "T_s", "tau", "eta", "batch_size", "phi",
                    "a_ms_per_sample", "hidden", "n_samples", "dims", "classes", "trials")
        for key in positive:
            if not getattr(self, key) > 0:
                raise ConfigError(key, "must be positive")
        for key in ("S_bits", "mu"):
            v = getattr(self, key)
            if v is not None and not v > 0:
                raise ConfigError(key, "must be positive")
        if self.M < 2:
            raise ConfigError("M", "need at least two devices")
        if not self.R_m > self.min_dist_m:
            raise ConfigError("R_m", "must exceed min_dist_m")
        if not self.alpha > 2:
            raise ConfigError("alpha", "must exceed 2")
        if not 0 < self.epsilon_alloc < 0.1:
            raise ConfigError("epsilon_alloc", "must lie in (0, 0.1)")
        if self.error_rel_std < 0:
            raise ConfigError("error_rel_std", "must be >= 0")
        if self.max_rounds < 0:
            raise ConfigError("max_rounds", "must be >= 0")
        if self.n_test < 0:
            raise ConfigError("n_test", "must be >= 0")
        if self.khat_mode not in ("full", "remaining"):
            raise ConfigError("khat_mode", "must be 'full' or 'remaining'")
        if self.model not in MODEL_KINDS:
            raise ConfigError("model", f"must be one of {MODEL_KINDS}")
        if self.data not in DATA_KINDS:
            raise ConfigError("data", f"must be one of {DATA_KINDS}")
        if (self.model == "linear") != (self.data == "synth_regression"):
            raise ConfigError("model", "linear goes with synth_regression and only with it")
        for key, parser in (("partition", PartitionSpec.parse), ("policy", PolicySpec.parse)):
            try:
                parser(getattr(self, key))
            except ValueError as exc:
                raise ConfigError(key, str(exc)) from None
        if self.data == "synth_regression" and PartitionSpec.parse(self.partition).mode != "iid":
            raise ConfigError("partition", "label shards need classification data")
        if self.data == "idx" and not (self.idx_train_images and self.idx_train_labels):
            raise ConfigError("idx_train_images", "idx data needs train image and label paths")
        pol = PolicySpec.parse(self.policy)
        if pol.n is not None and pol.n > self.M:
            raise ConfigError("policy", f"n={pol.n} exceeds M={self.M}")
        if pol.kind == "FC" and math.isinf(self.T_s):
            raise ConfigError("T_s", "FC needs a finite budget")

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    @property
    def policy_spec(self) -> PolicySpec:
        return PolicySpec.parse(self.policy)

    @property
    def partition_spec(self) -> PartitionSpec:
        return PartitionSpec.parse(self.partition)


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _convert(key: str, text: str):
    kind = _FIELD_TYPES[key]
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind == "float | None":
            return None if text.lower() in ("auto", "none", "") else float(text)
        if kind == "bool":
            low = text.lower()
            if low in ("true", "yes", "1"):
                return True
            if low in ("false", "no", "0"):
                return False
            raise ValueError(text)
        return text
    except ValueError:
        raise ConfigError(key, f"cannot read {text!r} as {kind}") from None


def parse_config_text(text: str, **overrides) -> ExperimentConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(line, f"line {lineno} is not 'key = value'")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(key, "unknown key")
        values[key] = _convert(key, val)
    for key, val in overrides.items():
        if val is None:
            continue
        if key not in _FIELD_TYPES:
            raise ConfigError(key, "unknown key")
        values[key] = _convert(key, val) if isinstance(val, str) else val
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError("?", str(exc)) from None


def load_config(path, **overrides) -> ExperimentConfig:
    return parse_config_text(Path(path).read_text(encoding="utf-8"), **overrides)


def seed_streams(master_seed: int, trial: int, component_tag: str) -> np.random.Generator:
    """Independent generator for one (trial, component) pair."""
    if component_tag not in SEED_TAGS:
        raise ValueError(f"unknown component {component_tag!r}")
    seq = np.random.SeedSequence(master_seed, spawn_key=(trial, SEED_TAGS.index(component_tag)))
    return np.random.Generator(np.random.PCG64(seq))


def _datasets(cfg: ExperimentConfig, rng: np.random.Generator) -> tuple[Dataset, Dataset | None]:
    if cfg.data == "idx":
        train = load_idx_dataset(cfg.idx_train_images, cfg.idx_train_labels)
        test = None
        if cfg.idx_test_images and cfg.idx_test_labels:
            test = load_idx_dataset(cfg.idx_test_images, cfg.idx_test_labels)
        return train, test
    if cfg.data == "synth_regression":
        train = synth_regression(rng, cfg.n_samples, cfg.dims, noise_std=cfg.noise_std)
        test = None
        if cfg.n_test:
            test = synth_regression(rng, cfg.n_test, cfg.dims, train.w_true, cfg.noise_std)
        return train, test
    means = rng.normal(0.0, cfg.class_sep, size=(cfg.classes, cfg.dims))
    train = synth_classification(rng, cfg.n_samples, cfg.dims, cfg.classes, means=means)
    test = None
    if cfg.n_test:
        test = synth_classification(rng, cfg.n_test, cfg.dims, cfg.classes, means=means)
    return train, test


def build_federation(cfg: ExperimentConfig, trial: int) -> Federation:
    data_rng = seed_streams(cfg.master_seed, trial, "data")
    train, test = _datasets(cfg, data_rng)
    classes = int(train.labels.max()) + 1 if cfg.data != "synth_regression" else 1
    dims = train.features.shape[1]
    model = make_model(cfg.model, dims, classes, hidden=cfg.hidden, svm_lambda=cfg.svm_lambda)
    devices = partition(train, cfg.M, cfg.partition_spec, data_rng)
    s_bits = cfg.S_bits if cfg.S_bits is not None else 32.0 * model.parameter_count
    radio = RadioConfig(cfg.B_hz, noise_density_from_dbm_per_mhz(cfg.N0_dbm_per_mhz),
                        s_bits, cfg.alpha)
    mu = cfg.mu if cfg.mu is not None else 1.0 / cfg.a_ms_per_sample
    power = dbm_to_watts(cfg.P_dbm)
    profiles = [DeviceProfile(i, len(d), min(cfg.batch_size, len(d)), cfg.a_ms_per_sample,
                              mu, power) for i, d in enumerate(devices)]
    return Federation(devices, profiles, radio, model, test)


def training_config(cfg: ExperimentConfig) -> TrainingConfig:
    return TrainingConfig(
        T_s=cfg.T_s, eta=cfg.eta, tau=cfg.tau, phi=cfg.phi, epsilon_alloc=cfg.epsilon_alloc,
        radius_m=cfg.R_m, min_dist_m=cfg.min_dist_m, error_rel_std=cfg.error_rel_std,
        fading=cfg.fading, khat_remaining=cfg.khat_mode == "remaining",
        max_rounds=cfg.max_rounds or None, init_rho=cfg.init_rho, init_beta=cfg.init_beta,
        init_delta=cfg.init_delta)


def run_trial(cfg: ExperimentConfig, trial: int) -> TrainingHistory:
    fed = build_federation(cfg, trial)
    streams = {k: seed_streams(cfg.master_seed, trial, k) for k in STREAM_KEYS}
    return run_training(fed, training_config(cfg), cfg.policy_spec, streams)


def run_trials(cfg: ExperimentConfig) -> list[TrainingHistory]:
    """All trials of ``cfg``; ``FEDSCHED_THREADS`` caps how many run at once."""
    threads = max(1, int(os.environ.get("FEDSCHED_THREADS", "1")))
    if threads == 1 or cfg.trials == 1:
        return [run_trial(cfg, t) for t in range(cfg.trials)]
    with ThreadPoolExecutor(max_workers=min(threads, cfg.trials)) as pool:
        return list(pool.map(lambda t: run_trial(cfg, t), range(cfg.trials)))


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def history_rows(trial: int, hist: TrainingHistory) -> Iterable[list[str]]:
    policy = str(hist.policy)
    for r in hist.records:
        yield [_fmt(x) for x in (trial, r.round, policy, r.n_scheduled, r.t_star_s,
                                 r.cumulative_s, r.K_hat, r.C_value, r.global_loss,
                                 r.true_global_loss, r.test_accuracy, r.rho_hat, r.beta_hat,
                                 r.delta_hat)]


def summarize(hist: TrainingHistory) -> dict:
    recs = hist.records
    return {
        "policy": str(hist.policy),
        "rounds_completed": len(recs),
        "best_accuracy": hist.best_accuracy,
        "best_loss": hist.state.best_loss if recs else math.nan,
        "best_true_loss": hist.best_true_loss,
        "final_true_loss": recs[-1].true_global_loss if recs else math.nan,
        "mean_n_scheduled": float(np.mean([r.n_scheduled for r in recs])) if recs else math.nan,
        "mean_t_star_s": float(np.mean([r.t_star_s for r in recs])) if recs else math.nan,
        "elapsed_s": hist.state.elapsed_s,
    }


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _write_atomic(files: dict[str, str], out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(dir=out, prefix=f".{name}.")
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            staged.append((tmp, out / name))
        for tmp, final in staged:
            os.replace(tmp, final)
    finally:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)


def run(config_path, out_dir, *, seed: int | None = None, policy: str | None = None,
        trials: int | None = None) -> list[TrainingHistory]:
    """Run every trial and write ``history.csv`` and ``summary.csv`` to ``out_dir``.

    The config is fully validated before anything is created on disk.
    """
    cfg = load_config(config_path, master_seed=seed, policy=policy, trials=trials)
    histories = run_trials(cfg)
    hist_rows, summary_rows = [], []
    for t, hist in enumerate(histories):
        hist_rows.extend(history_rows(t, hist))
        s = summarize(hist)
        summary_rows.append([_fmt(t)] + [_fmt(s[c]) for c in SUMMARY_COLUMNS[1:]])
    _write_atomic({"history.csv": _csv_text(HISTORY_COLUMNS, hist_rows),
                   "summary.csv": _csv_text(SUMMARY_COLUMNS, summary_rows)}, out_dir)
    log.info("wrote %d history rows for %d trials to %s", len(hist_rows), len(histories), out_dir)
    return histories


def _sweep_override(key: str, value: str) -> dict:
    if key == "fixed_n":
        return {"policy": f"FixedN:{int(value)}"}
    return {key: value}


def sweep(config_path, sweep_key: str, values: Iterable[str], out_dir, *,
          trials: int | None = None) -> list[dict]:
    """Run the config once per value of ``sweep_key`` and write ``sweep.csv``."""
    if sweep_key not in SWEEP_KEYS:
        raise ConfigError(sweep_key, f"cannot sweep; choose one of {SWEEP_KEYS}")
    values = [str(v).strip() for v in values]
    if not values:
        raise ConfigError(sweep_key, "no sweep values given")
    base_text = Path(config_path).read_text(encoding="utf-8")
    configs = [parse_config_text(base_text, trials=trials, **_sweep_override(sweep_key, v))
               for v in values]
    rows = []
    for value, cfg in zip(values, configs):
        sums = [summarize(h) for h in run_trials(cfg)]
        acc = np.array([s["best_accuracy"] for s in sums], dtype=float)
        rows.append({
            "key": sweep_key, "value": value, "trials": len(sums),
            "mean_best_accuracy": float(np.mean(acc)),
            "std_best_accuracy": float(np.std(acc, ddof=1)) if len(acc) > 1 else 0.0,
            "mean_best_true_loss": float(np.mean([s["best_true_loss"] for s in sums])),
            "mean_n_scheduled": float(np.mean([s["mean_n_scheduled"] for s in sums])),
            "mean_t_star_s": float(np.mean([s["mean_t_star_s"] for s in sums])),
            "mean_rounds": float(np.mean([s["rounds_completed"] for s in sums])),
        })
    _write_atomic({"sweep.csv": _csv_text(SWEEP_COLUMNS,
                                          [[_fmt(r[c]) for c in SWEEP_COLUMNS] for r in rows])},
                  out_dir)
    return rows
