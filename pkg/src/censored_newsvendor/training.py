"""Shared mini-batch training plumbing: config, trace, splits, early stopping."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

# Training halts outright once the monitored loss drops below this floor.
BASELINE_LOSS = 1e-6


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss or parameter."""


@dataclass(frozen=True)
class TrainConfig:
    """Knobs for the mini-batch descent loops.

    eta is the constant learning rate, l2 the weight-decay coefficient
    (0 disables it; the intercept / biases are never penalized).  A fraction
    val_fraction of the data is held out for early stopping: training stops
    when the validation loss has not improved by more than `tolerance` for
    `patience` consecutive epochs, and the best-validation snapshot is what
    gets returned.
    """

    eta: float = 0.015
    batch_size: int = 128
    max_epochs: int = 500
    val_fraction: float = 0.25
    patience: int = 30
    tolerance: float = 1e-7
    l2: float = 0.0
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError(f"learning rate must be positive, got {self.eta}")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError(
                f"validation fraction must lie in (0, 1), got {self.val_fraction}"
            )
        if self.patience > self.max_epochs:
            raise ValueError(
                f"patience {self.patience} exceeds max_epochs {self.max_epochs}"
            )
        if self.l2 < 0:
            raise ValueError(f"l2 coefficient must be nonnegative, got {self.l2}")

    def updated(self, **kwargs) -> "TrainConfig":
        return replace(self, **kwargs)


@dataclass
class TrainTrace:
    """Per-epoch train/validation losses plus wall-clock fitting time."""

    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    fit_seconds: float = 0.0
    best_epoch: int = 0
    epochs_run: int = 0
    stop_reason: str = "max_epochs"


def train_val_split(
    n: int, config: TrainConfig, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Split indices into train/validation; shuffled when config.shuffle."""
    idx = rng.permutation(n) if config.shuffle else np.arange(n)
    n_val = int(round(config.val_fraction * n))
    n_val = min(max(n_val, 1), n - 1)
    return idx[n_val:], idx[:n_val]


class EarlyStopper:
    """Patience counter over validation loss, tracking the best epoch.

    An epoch counts against the patience budget when its loss failed to drop
    below the previous epoch's by more than the tolerance; the returned-model
    snapshot separately tracks the best loss seen so far.
    """

    def __init__(self, patience: int, tolerance: float):
        self.patience = patience
        self.tolerance = tolerance
        self.best = np.inf
        self.best_epoch = 0
        self._prev = np.inf
        self._streak = 0

    def update(self, val_loss: float, epoch: int) -> bool:
        """Record an epoch; returns True when this is a new best snapshot."""
        reduced = val_loss < self._prev - self.tolerance
        self._prev = val_loss
        is_best = val_loss < self.best
        if is_best:
            self.best = val_loss
            self.best_epoch = epoch
        if reduced:
            self._streak = 0
        else:
            self._streak += 1
        return is_best

    @property
    def should_stop(self) -> bool:
        return self._streak >= self.patience


def batches(order: np.ndarray, batch_size: int):
    for start in range(0, order.shape[0], batch_size):
        yield order[start : start + batch_size]
