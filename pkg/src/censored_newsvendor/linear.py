"""Linear decision models y = x.theta under any supported training loss.

Feature column 0 is the constant 1 by convention; the weight-decay penalty
skips it.  Three training paths: mini-batch subgradient descent (any loss),
ordinary least squares in closed form (squared error), and the exact LP
solve of the band-insensitive loss.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .losses import EPS_NV, LossSpec, batch_loss, evaluate
from .simplex import OPTIMAL, build_eps_nv_lp, extract_theta, solve_simplex
from .training import (
    BASELINE_LOSS,
    DivergenceError,
    EarlyStopper,
    TrainConfig,
    TrainTrace,
    batches,
    train_val_split,
)

LP_ROW_CAP = 2000


@dataclass
class LinearModel:
    theta: np.ndarray

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        if self.theta.ndim != 1:
            raise ValueError("coefficient vector must be one-dimensional")
        if not np.all(np.isfinite(self.theta)):
            raise ValueError("coefficient vector must be finite")

    @property
    def p(self) -> int:
        return self.theta.shape[0]


def predict(model: LinearModel, features) -> float | np.ndarray:
    """x.theta for a single feature vector or a matrix of rows."""
    X = np.asarray(features, dtype=float)
    if X.shape[-1] != model.p:
        raise ValueError(
            f"feature dimension {X.shape[-1]} does not match model dimension {model.p}"
        )
    out = X @ model.theta
    return float(out) if out.ndim == 0 else out


def fit_gd(
    dataset, spec: LossSpec, config: TrainConfig
) -> tuple[LinearModel, TrainTrace]:
    """Mini-batch subgradient descent from theta = 0.

    Updates theta <- theta - (eta/batch) sum_i dL_i/dtheta, plus the
    2*l2*theta decay term (intercept exempt) when config.l2 > 0.  Returns the
    best-validation snapshot, not the last iterate.
    """
    X = np.asarray(dataset.features, dtype=float)
    s = np.asarray(dataset.sales, dtype=float)
    n, p = X.shape
    if n < 2:
        raise ValueError("need at least two rows to hold out a validation split")

    rng = np.random.default_rng(config.seed)
    train_idx, val_idx = train_val_split(n, config, rng)
    if config.batch_size > train_idx.shape[0]:
        raise ValueError(
            f"batch size {config.batch_size} exceeds training split size "
            f"{train_idx.shape[0]}"
        )

    penalty_mask = np.ones(p)
    penalty_mask[0] = 0.0  # intercept carries no weight decay

    theta = np.zeros(p)
    best_theta = theta.copy()
    stopper = EarlyStopper(config.patience, config.tolerance)
    trace = TrainTrace()
    started = time.perf_counter()

    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(train_idx) if config.shuffle else train_idx
        for batch in batches(order, config.batch_size):
            y = X[batch] @ theta
            g = np.asarray(evaluate(s[batch], y, spec).subgrad)
            grad = X[batch].T @ g / batch.shape[0]
            if config.l2 > 0.0:
                grad = grad + 2.0 * config.l2 * theta * penalty_mask
            theta = theta - config.eta * grad
        if not np.all(np.isfinite(theta)):
            raise DivergenceError(f"non-finite parameters at epoch {epoch}")

        train_loss = batch_loss(s[train_idx], X[train_idx] @ theta, spec)
        val_loss = batch_loss(s[val_idx], X[val_idx] @ theta, spec)
        if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
            raise DivergenceError(f"non-finite loss at epoch {epoch}")
        trace.train_loss.append(train_loss)
        trace.val_loss.append(val_loss)
        trace.epochs_run = epoch

        if stopper.update(val_loss, epoch):
            best_theta = theta.copy()
        if val_loss < BASELINE_LOSS:
            trace.stop_reason = "baseline"
            break
        if stopper.should_stop:
            trace.stop_reason = "patience"
            break

    trace.best_epoch = stopper.best_epoch
    trace.fit_seconds = time.perf_counter() - started
    return LinearModel(best_theta), trace


def fit_mse_closed_form(dataset) -> LinearModel:
    """Ordinary least squares via a stable least-squares factorization."""
    X = np.asarray(dataset.features, dtype=float)
    s = np.asarray(dataset.sales, dtype=float)
    gram = X.T @ X
    if np.linalg.cond(gram) > 1e12:
        raise ValueError(
            "design matrix is rank-deficient (condition number above 1e12)"
        )
    theta, *_ = np.linalg.lstsq(X, s, rcond=None)
    return LinearModel(theta)


def fit_lp(dataset, spec: LossSpec, row_cap: int = LP_ROW_CAP) -> LinearModel:
    """Exact minimizer of the band-insensitive loss via the bundled simplex."""
    n = np.asarray(dataset.sales).shape[0]
    if n > row_cap:
        raise ValueError(
            f"dataset has {n} rows, above the LP solver cap of {row_cap}; "
            "use fit_gd for instances this large"
        )
    lp = build_eps_nv_lp(dataset, spec)
    solution = solve_simplex(lp)
    if solution.status != OPTIMAL:
        raise RuntimeError(f"LP solve finished with status {solution.status}")
    p = np.asarray(dataset.features).shape[1]
    return LinearModel(extract_theta(solution, n, p))


def training_loss(model: LinearModel, dataset, spec: LossSpec) -> float:
    """Mean loss of the model over a dataset (handy for LP/GD comparisons)."""
    return batch_loss(dataset.sales, predict(model, dataset.features), spec)


# Serialization: dimension on the first line, then one coefficient per line
# at 17 significant digits, which round-trips float64 exactly.


def to_text(model: LinearModel) -> str:
    lines = [str(model.p)]
    lines.extend(f"{v:.17g}" for v in model.theta)
    return "\n".join(lines) + "\n"


def from_text(text: str) -> LinearModel:
    tokens = text.split()
    if not tokens:
        raise ValueError("empty linear model record")
    p = int(tokens[0])
    if len(tokens) != p + 1:
        raise ValueError(f"expected {p} coefficients, found {len(tokens) - 1}")
    return LinearModel(np.array([float(t) for t in tokens[1:]]))


def save_model(model: LinearModel, path) -> None:
    Path(path).write_text(to_text(model))


def load_model(path) -> LinearModel:
    return from_text(Path(path).read_text())
