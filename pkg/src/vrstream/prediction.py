"""Head-pose prediction: sliding-window datasets, a constant-angular-velocity
baseline, and cross-validated training of the recurrent model.

Training regresses raw quaternion 4-vectors under a root-mean-square loss;
traces are sign-continuized first so the regression target is continuous.
Evaluation always uses the rotation angle between predicted and true
orientation, which is what actually matters for viewport mapping.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    angular_distance_many,
    enforce_sign_continuity,
    normalize,
    quat_conjugate,
    quat_multiply,
)
from .gru import Adam, GruModel, rmse_loss

log = logging.getLogger(__name__)

_EVAL_CHUNK = 4096


@dataclass(frozen=True)
class PredictionConfig:
    """Sliding-window shape: how many past frames in, which future frame out."""

    history_window: int = 10
    horizon: int = 10
    input_dim: int = 4

    def __post_init__(self):
        if self.history_window < 1 or self.horizon < 1:
            raise ValueError("history_window and horizon must be >= 1")
        if self.input_dim != 4:
            raise ValueError("pose vectors are quaternions; input_dim must be 4")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 100
    batch_size: int = 32
    folds: int = 5
    beta1: float = 0.9
    beta2: float = 0.999
    hidden: int = 128
    sample_stride: int = 1
    dtype: str = "float32"

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.folds < 2:
            raise ValueError("cross validation needs at least 2 folds")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")


@dataclass
class FoldResult:
    val_error_deg: float
    epoch_losses: list[float]
    status: str = "ok"  # or "diverged"


@dataclass
class TrainResult:
    model: GruModel
    best_fold: int
    fold_errors_deg: list[float]
    folds: list[FoldResult] = field(default_factory=list)


def make_dataset(traces, cfg: PredictionConfig, stride: int = 1):
    """Sliding windows over every trace.

    Returns (inputs (n, history, 4), targets (n, 4), skipped) where
    ``skipped`` counts traces too short to yield a single sample. With
    stride 1 a trace of length L yields L - history - horizon + 1 samples.
    """
    xs: list[np.ndarray] = []
    ys: list[np.ndarray] = []
    skipped = 0
    need = cfg.history_window + cfg.horizon
    for trace in traces:
        q = enforce_sign_continuity(trace.poses)
        n = q.shape[0]
        if n < need:
            skipped += 1
            log.warning("trace %s too short for windowing (%d < %d)",
                        getattr(trace, "user_id", "?"), n, need)
            continue
        ends = np.arange(cfg.history_window - 1, n - cfg.horizon, stride)
        idx = ends[:, None] + np.arange(1 - cfg.history_window, 1)[None, :]
        xs.append(q[idx])
        ys.append(q[ends + cfg.horizon])
    if not xs:
        return (np.empty((0, cfg.history_window, 4)), np.empty((0, 4)), skipped)
    return np.concatenate(xs), np.concatenate(ys), skipped


# ---------------------------------------------------------------------------
# Baseline: constant angular velocity
# ---------------------------------------------------------------------------
def baseline_predict_many(windows: np.ndarray, horizon: int) -> np.ndarray:
    """Extrapolate each window by repeating its last per-frame rotation.

    The relative rotation between the last two poses is raised to the
    ``horizon``-th power (axis fixed, angle scaled) and applied to the last
    pose, so constant-rate rotations are extrapolated exactly.
    """
    w = normalize(np.asarray(windows, dtype=float))
    if w.shape[-2] < 2:
        raise ValueError("baseline needs at least two poses of history")
    prev = w[..., -2, :]
    last = w[..., -1, :].copy()
    # Work on the sign-aligned pair so the step rotation is the short way.
    flip = np.sum(prev * last, axis=-1) < 0.0
    last[flip] *= -1.0
    step = quat_multiply(last, quat_conjugate(prev))
    neg = step[..., 0] < 0.0
    step[neg] *= -1.0
    half = np.arccos(np.clip(step[..., 0], -1.0, 1.0))
    sin_half = np.sin(half)
    out = np.empty_like(last)
    still = sin_half < 1e-9  # no measurable rotation between the last frames
    out[still] = last[still]
    if np.any(~still):
        axis = step[~still, 1:] / sin_half[~still, None]
        scaled = half[~still] * horizon
        power = np.concatenate(
            [np.cos(scaled)[:, None], np.sin(scaled)[:, None] * axis], axis=-1
        )
        out[~still] = quat_multiply(power, last[~still])
    return normalize(out)


def baseline_predict(window, horizon: int) -> np.ndarray:
    """Single-window variant of ``baseline_predict_many``."""
    return baseline_predict_many(np.asarray(window, dtype=float)[None], horizon)[0]


# ---------------------------------------------------------------------------
# Model inference and training
# ---------------------------------------------------------------------------
def predict_poses(model: GruModel, windows: np.ndarray) -> np.ndarray:
    """Run the model and normalize outputs to unit quaternions.

    A degenerate near-zero output falls back to the window's last pose, so
    the result is always a valid orientation.
    """
    windows = np.asarray(windows, dtype=float)
    outs = []
    for start in range(0, windows.shape[0], _EVAL_CHUNK):
        chunk = windows[start : start + _EVAL_CHUNK]
        y, _ = model.forward(chunk)
        y = y.astype(float)
        norms = np.linalg.norm(y, axis=-1, keepdims=True)
        tiny = norms[:, 0] < 1e-9
        if np.any(tiny):
            y[tiny] = chunk[tiny, -1, :]
            norms = np.linalg.norm(y, axis=-1, keepdims=True)
        outs.append(y / norms)
    return np.concatenate(outs) if outs else np.empty((0, 4))


def angular_errors_deg(pred: np.ndarray, truth: np.ndarray) -> np.ndarray:
    return np.degrees(angular_distance_many(pred, truth))


class TrainingDiverged(RuntimeError):
    def __init__(self, fold: int, epoch: int, batch: int):
        super().__init__(f"non-finite loss in fold {fold}, epoch {epoch}, batch {batch}")
        self.fold = fold
        self.epoch = epoch
        self.batch = batch


def _fold_groups(n_traces: int, folds: int, rng: np.random.Generator) -> list[np.ndarray]:
    order = rng.permutation(n_traces)
    return np.array_split(order, folds)


def train(traces, pred_cfg: PredictionConfig, train_cfg: TrainConfig,
          seed: int = 0) -> TrainResult:
    """K-fold cross-validated training; folds split whole traces, not windows.

    Each fold trains a fresh model on the other folds' traces and reports
    the mean validation angle in degrees. Returns the best fold's model
    along with every fold's error. A fold whose loss goes non-finite is
    aborted and marked diverged rather than failing the whole run.
    """
    traces = list(traces)
    if not traces:
        raise ValueError("no traces to train on")
    rng = np.random.default_rng(seed)
    groups = _fold_groups(len(traces), train_cfg.folds, rng)
    dtype = np.dtype(train_cfg.dtype)
    results: list[FoldResult] = []
    models: list[GruModel] = []

    for k, val_idx in enumerate(groups):
        val_set = set(int(i) for i in val_idx)
        train_traces = [t for i, t in enumerate(traces) if i not in val_set]
        val_traces = [t for i, t in enumerate(traces) if i in val_set]
        x, y, _ = make_dataset(train_traces, pred_cfg, stride=train_cfg.sample_stride)
        xv, yv, _ = make_dataset(val_traces, pred_cfg, stride=train_cfg.sample_stride)
        if x.shape[0] == 0 or xv.shape[0] == 0:
            raise ValueError(f"fold {k} has an empty train or validation set")
        x = x.astype(dtype)
        y = y.astype(dtype)

        model = GruModel(
            input_dim=pred_cfg.input_dim,
            hidden=train_cfg.hidden,
            seed=seed * 1000 + k,
            dtype=dtype,
        )
        params = model.parameters()
        opt = Adam(params, lr=train_cfg.learning_rate,
                   beta1=train_cfg.beta1, beta2=train_cfg.beta2)
        fold_rng = np.random.default_rng(seed * 1000 + 500 + k)
        epoch_losses: list[float] = []
        status = "ok"
        for epoch in range(train_cfg.epochs):
            perm = fold_rng.permutation(x.shape[0])
            total = 0.0
            batches = 0
            for start in range(0, x.shape[0], train_cfg.batch_size):
                sel = perm[start : start + train_cfg.batch_size]
                pred, cache = model.forward(x[sel])
                loss, dpred = rmse_loss(pred, y[sel])
                if not math.isfinite(loss):
                    status = "diverged"
                    log.error("training diverged: fold %d epoch %d batch %d",
                              k, epoch, batches)
                    break
                grads = model.backward(cache, dpred)
                opt.step(params, grads)
                total += loss
                batches += 1
            if status == "diverged":
                break
            epoch_losses.append(total / max(batches, 1))

        if status == "diverged":
            results.append(FoldResult(float("nan"), epoch_losses, status))
            models.append(model)
            continue
        preds = predict_poses(model, xv)
        err = float(np.mean(angular_errors_deg(preds, yv)))
        results.append(FoldResult(err, epoch_losses))
        models.append(model)

    finite = [i for i, r in enumerate(results) if math.isfinite(r.val_error_deg)]
    if not finite:
        raise TrainingDiverged(0, 0, 0)
    best = min(finite, key=lambda i: results[i].val_error_deg)
    return TrainResult(
        model=models[best],
        best_fold=best,
        fold_errors_deg=[r.val_error_deg for r in results],
        folds=results,
    )


# ---------------------------------------------------------------------------
# Horizon sweeps
# ---------------------------------------------------------------------------
def baseline_predictor(windows: np.ndarray, horizon: int) -> np.ndarray:
    return baseline_predict_many(windows, horizon)


def model_predictor(models):
    """Adapt a trained model (or {horizon: model} dict) to the predictor
    signature used by ``evaluate_horizon``."""

    def predict(windows: np.ndarray, horizon: int) -> np.ndarray:
        model = models[horizon] if isinstance(models, dict) else models
        return predict_poses(model, windows)

    return predict


def evaluate_horizon(predictor, traces, horizons, history_window: int = 10,
                     stride: int = 1) -> dict[int, float]:
    """Mean angular error (degrees) of a predictor per horizon.

    ``predictor(windows, horizon)`` must return one predicted pose per
    window; every validation window/target pair comes from ``make_dataset``.
    """
    table: dict[int, float] = {}
    for h in horizons:
        cfg = PredictionConfig(history_window=history_window, horizon=h)
        x, y, _ = make_dataset(traces, cfg, stride=stride)
        if x.shape[0] == 0:
            raise ValueError(f"no evaluation samples at horizon {h}")
        preds = predictor(x, h)
        table[h] = float(np.mean(angular_errors_deg(preds, y)))
    return table
