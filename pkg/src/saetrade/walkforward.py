"""Walk-forward splits and the per-split fit/predict pipeline.

Each split fits fractional orders, scaler statistics and model weights on
its train slice only, then predicts its test slice. Train rows whose target
window reaches into the test slice are purged.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from saetrade import fracdiff, sae
from saetrade.ingest import BarSeries, FeatureFrame
from saetrade.labeling import LabelSpec, PhiParams, phi_score, triple_barrier_labels

logger = logging.getLogger(__name__)

TARGET_KINDS = ("return", "direction", "tbl")


class WalkForwardError(RuntimeError):
    def __init__(self, split: int, cause: str):
        super().__init__(f"split {split}: {cause}")
        self.split = split


class SingleClassError(ValueError):
    pass


@dataclass(frozen=True)
class Split:
    index: int
    train: tuple[int, int]  # [start, stop)
    test: tuple[int, int]


@dataclass(frozen=True)
class WalkForwardPlan:
    splits: list[Split]
    period: int
    max_train_periods: Optional[int]

    def __len__(self):
        return len(self.splits)

    def train_periods(self) -> list[int]:
        return [(s.train[1] - s.train[0]) // self.period for s in self.splits]


def make_splits(total: int, period: int, max_train_periods: Optional[int] = None,
                initial: int = 1) -> WalkForwardPlan:
    """Expanding-then-shifting plan with one test period per split.

    Split ``k`` tests period ``initial + k`` and trains on the
    ``min(initial + k, max_train_periods)`` periods just before it. A
    trailing partial period is dropped.
    """
    if period < 1 or initial < 1:
        raise ValueError("period and initial train periods must be positive")
    if max_train_periods is not None and max_train_periods < 1:
        raise ValueError("max_train_periods must be positive")
    need = (initial + 1) * period
    if total < need:
        raise ValueError(f"need at least {need} bars for {initial} train period(s) plus one test period, got {total}")
    n_periods = total // period
    splits = []
    for k, p in enumerate(range(initial, n_periods)):
        m = initial + k if max_train_periods is None else min(initial + k, max_train_periods)
        splits.append(Split(k, ((p - m) * period, p * period), (p * period, (p + 1) * period)))
    return WalkForwardPlan(splits, period, max_train_periods)


def bars_per_month(frequency_minutes: int, minutes_per_day: int = 390, days: int = 21) -> int:
    """Default period length: one trading month of bars."""
    return max(1, (minutes_per_day * days) // frequency_minutes)


@dataclass(frozen=True)
class FracDiffSettings:
    d_grid: tuple = fracdiff.DEFAULT_D_GRID
    alpha: float = 0.01
    tau: float = fracdiff.DEFAULT_TAU
    k_max: int = fracdiff.DEFAULT_K_MAX
    max_lags: int = 1
    lag_policy: str = "fixed"
    enabled: bool = True


@dataclass(frozen=True)
class TargetSettings:
    """What the model learns.

    ``return``: next-bar simple return. ``direction``: +1 if the next close
    is higher, else -1. ``tbl``: triple-barrier label with ``label``.
    """

    kind: str = "tbl"
    label: Optional[LabelSpec] = None
    use_high_low: bool = False

    def __post_init__(self):
        if self.kind not in TARGET_KINDS:
            raise ValueError(f"target kind must be one of {TARGET_KINDS}")
        if self.kind == "tbl" and self.label is None:
            raise ValueError("tbl targets need a LabelSpec")

    @property
    def horizon(self) -> int:
        return self.label.n if self.kind == "tbl" else 1


@dataclass(frozen=True)
class SearchSettings:
    """Hyperparameter search over SAEConfig fields on a validation tail."""

    space: dict = field(default_factory=dict)
    method: str = "grid"
    trials: int = 15
    validation_fraction: float = 0.2

    def candidates(self, seed: int) -> list[dict]:
        keys = sorted(self.space)
        combos = [dict(zip(keys, vals)) for vals in itertools.product(*(self.space[k] for k in keys))]
        if self.method == "grid" or len(combos) <= self.trials:
            return combos
        if self.method != "random":
            raise ValueError("search method must be 'grid' or 'random'")
        pick = np.random.default_rng(seed).choice(len(combos), size=self.trials, replace=False)
        return [combos[i] for i in sorted(pick)]


@dataclass
class SplitRecord:
    index: int
    train: tuple[int, int]
    test: tuple[int, int]
    status: str
    d: dict = field(default_factory=dict)
    scaler_mean: list = field(default_factory=list)
    scaler_scale: list = field(default_factory=list)
    history: list = field(default_factory=list)
    train_rows: int = 0
    train_phi: Optional[float] = None
    params: dict = field(default_factory=dict)
    seed: int = 0
    diagnostic: str = ""

    def to_dict(self) -> dict:
        return {
            "index": self.index, "train": list(self.train), "test": list(self.test),
            "status": self.status, "d": self.d, "scaler_mean": self.scaler_mean,
            "scaler_scale": self.scaler_scale, "history": self.history,
            "train_rows": self.train_rows, "train_phi": self.train_phi,
            "params": self.params, "seed": self.seed, "diagnostic": self.diagnostic,
        }


@dataclass
class WalkForwardResult:
    rows: np.ndarray  # frame row per prediction
    timestamps: np.ndarray
    predictions: np.ndarray
    splits: list[SplitRecord]
    models: list[Optional[sae.SAEModel]]


def make_targets(closes: np.ndarray, target: TargetSettings, high=None, low=None) -> np.ndarray:
    """Target per bar; the trailing bars without a full future are NaN."""
    c = np.asarray(closes, dtype=float)
    out = np.full(len(c), np.nan)
    if target.kind == "return":
        out[:-1] = c[1:] / c[:-1] - 1.0
    elif target.kind == "direction":
        out[:-1] = np.where(c[1:] > c[:-1], 1.0, -1.0)
    else:
        hl = (high, low) if target.use_high_low else (None, None)
        out[:-1] = triple_barrier_labels(c, target.label, *hl).values
    return out


def _fit_features(raw: np.ndarray, train: tuple[int, int], stop: int, settings: FracDiffSettings,
                  names: Sequence[str]) -> tuple[np.ndarray, dict]:
    """Fit d per column on the train slice; transform rows [0, stop) causally."""
    out = np.empty((stop, raw.shape[1]))
    d_map = {}
    for j, name in enumerate(names):
        col = raw[:stop, j]
        if not settings.enabled:
            out[:, j] = col
            d_map[name] = 0.0
            continue
        spec, _ = fracdiff.fit_spec(col[train[0]:train[1]], settings.d_grid, settings.alpha, settings.tau,
                                    settings.max_lags, settings.lag_policy, settings.k_max)
        out[:, j] = fracdiff.transform_with_history(col, spec.weights)
        d_map[name] = spec.d
    return out, d_map


def _score(model: sae.SAEModel, x, y, target: TargetSettings, phi_params: Optional[PhiParams]) -> float:
    pred = model.predict(x)
    if target.kind == "tbl" and phi_params is not None:
        return phi_score(pred, y.astype(np.int64), phi_params)
    if target.kind == "return":
        return -float(np.mean((pred - y) ** 2))
    return float(np.mean(pred == y))


def _search(config: sae.SAEConfig, x, y, target, phi_params, search: SearchSettings, seed: int):
    n_val = int(round(len(x) * search.validation_fraction))
    # purge the horizon between the fit and validation parts
    fit_stop = len(x) - n_val - target.horizon
    if n_val < 1 or fit_stop < 2:
        raise ValueError("train slice too short for the validation tail")
    best, best_score = {}, -np.inf
    for cand in search.candidates(seed):
        cfg = replace(config, **cand)
        model = sae.train(cfg, x[:fit_stop], y[:fit_stop])
        s = _score(model, x[-n_val:], y[-n_val:], target, phi_params)
        logger.debug("search %s -> %.6f", cand, s)
        if s > best_score:
            best, best_score = cand, s
    return best


def run_split(split: Split, frame: FeatureFrame, bars: BarSeries, targets: np.ndarray,
              fd: FracDiffSettings, target: TargetSettings, config: sae.SAEConfig, seed: int,
              phi_params: Optional[PhiParams] = None, search: Optional[SearchSettings] = None):
    """Fit on ``split.train`` and predict ``split.test``; rows index ``frame``."""
    split_seed = seed ^ split.index
    t0, t1 = split.train
    s0, s1 = split.test
    x, d_map = _fit_features(frame.values, split.train, s1, fd, frame.names)
    record = SplitRecord(split.index, split.train, split.test, "ok", d=d_map, seed=split_seed)

    rows = np.arange(t0, t1 - target.horizon)
    rows = rows[np.all(np.isfinite(x[rows]), axis=1) & np.isfinite(targets[rows])]
    if len(rows) < 2:
        raise ValueError(f"only {len(rows)} usable train rows after warm-up and purge")
    x_test = x[s0:s1]
    if not np.all(np.isfinite(x_test)):
        raise ValueError("test features contain NaN; fractional window wider than available history")
    y = targets[rows]
    if target.kind != "return":
        classes = np.unique(y)
        if len(classes) < 2:
            raise SingleClassError(f"train labels hold a single class {classes.astype(int).tolist()}")
        if config.output_mode == "binary" and not set(classes) <= {-1.0, 1.0}:
            raise ValueError("binary mode needs labels in {-1, +1}")

    cfg = replace(config, input_dim=x.shape[1], seed=split_seed)
    if search is not None and search.space:
        record.params = _search(cfg, x[rows], y, target, phi_params, search, split_seed)
        cfg = replace(cfg, **record.params)
    model = sae.train(cfg, x[rows], y)
    record.train_rows = len(rows)
    record.history = model.history
    record.scaler_mean = model.mean.tolist()
    record.scaler_scale = model.scale.tolist()
    if target.kind == "tbl" and phi_params is not None:
        record.train_phi = phi_score(model.predict(x[rows]), y.astype(np.int64), phi_params)
    return model.predict(x_test), record, model


def run_walkforward(bars: BarSeries, frame: FeatureFrame, plan: WalkForwardPlan, fd: FracDiffSettings,
                    target: TargetSettings, config: sae.SAEConfig, seed: int = 0,
                    phi_params: Optional[PhiParams] = None,
                    search: Optional[SearchSettings] = None) -> WalkForwardResult:
    """Run every split in order and concatenate the test predictions.

    ``plan`` indexes rows of ``frame``; ``bars`` is the series the frame was
    aligned to. Single-class train slices in ternary mode are skipped with a
    diagnostic and their test bars predicted flat (0); any other failure
    aborts with the split index.
    """
    closes = bars.close[frame.bar_index]
    hl = (bars.high[frame.bar_index], bars.low[frame.bar_index])
    targets = make_targets(closes, target, *hl)
    preds, rows, records, models = [], [], [], []
    for split in plan.splits:
        if split.test[1] > len(frame):
            raise WalkForwardError(split.index, "plan extends past the feature frame")
        try:
            p, rec, model = run_split(split, frame, bars, targets, fd, target, config, seed, phi_params, search)
        except SingleClassError as exc:
            if config.output_mode != "ternary":
                raise WalkForwardError(split.index, str(exc)) from exc
            logger.warning("split %d skipped: %s", split.index, exc)
            n = split.test[1] - split.test[0]
            p = np.zeros(n, dtype=np.int64)
            rec = SplitRecord(split.index, split.train, split.test, "skipped", seed=seed ^ split.index,
                              diagnostic=str(exc))
            model = None
        except (ValueError, sae.TrainingDivergedError) as exc:
            raise WalkForwardError(split.index, str(exc)) from exc
        preds.append(p)
        rows.append(np.arange(*split.test))
        records.append(rec)
        models.append(model)
        logger.info("split %d: train %s test %s d=%s", split.index, split.train, split.test, rec.d)
    r = np.concatenate(rows)
    return WalkForwardResult(r, frame.timestamps[r], np.concatenate(preds), records, models)
