"""Small fully-connected network with sigmoid hidden layers and a linear output.

Forward/backward passes are hand-rolled so any of the supported loss
subgradients can drive the output delta.  Training is plain mini-batch SGD
with one permutation drawn per run and reused every pass, which is also the
premise of the parameter-stability probe; an adaptive-moment optimizer is
available behind a flag but excluded from stability checks.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.special import expit

from .losses import LossSpec, batch_loss, evaluate
from .training import (
    BASELINE_LOSS,
    DivergenceError,
    EarlyStopper,
    TrainConfig,
    TrainTrace,
    batches,
    train_val_split,
)


@dataclass
class MLPModel:
    """Layer sizes [p, h1, ..., 1] with per-layer weight matrices and biases.

    weights[l] has shape (size of layer l+1, size of layer l); the output
    layer is a single identity node.
    """

    layer_sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if self.layer_sizes[-1] != 1:
            raise ValueError("the output layer must hold exactly one node")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            expected = (self.layer_sizes[l + 1], self.layer_sizes[l])
            if w.shape != expected:
                raise ValueError(f"weight matrix {l} has shape {w.shape}, expected {expected}")
            if b.shape != (self.layer_sizes[l + 1],):
                raise ValueError(f"bias vector {l} has length {b.shape}")

    @property
    def p(self) -> int:
        return self.layer_sizes[0]

    def copy(self) -> "MLPModel":
        return MLPModel(
            list(self.layer_sizes),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )

    def flatten(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b.ravel())
        return np.concatenate(parts)


class BackpropState(NamedTuple):
    """Cached activations (a^0 is the input) and pre-activations per layer."""

    activations: list[np.ndarray]
    pre_activations: list[np.ndarray]


class GradientSet(NamedTuple):
    weights: list[np.ndarray]
    biases: list[np.ndarray]


def init_mlp(layer_sizes, seed: int = 0) -> MLPModel:
    """Symmetric uniform init with r = sqrt(6 / (fan_in + fan_out)), zero biases."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        r = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-r, r, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MLPModel(list(layer_sizes), weights, biases)


def forward(model: MLPModel, features) -> tuple[float | np.ndarray, BackpropState]:
    """Sigmoid hidden layers, identity output; caches state for backward."""
    x = np.asarray(features, dtype=float)
    single = x.ndim == 1
    a = x.reshape(1, -1) if single else x
    if a.shape[1] != model.p:
        raise ValueError(
            f"feature dimension {a.shape[1]} does not match input layer {model.p}"
        )
    activations = [a]
    pre_activations = []
    last = len(model.weights) - 1
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ w.T + b
        pre_activations.append(z)
        a = z if l == last else expit(z)
        activations.append(a)
    y = a[:, 0]
    return (float(y[0]) if single else y), BackpropState(activations, pre_activations)


def backward(model: MLPModel, state: BackpropState, s, spec: LossSpec) -> GradientSet:
    """Backpropagate the loss subgradient; returns gradients averaged over the batch.

    The output delta is dL/dy from the loss family; hidden deltas recurse as
    delta^{l-1} = (delta^l . W^l) * a^{l-1} (1 - a^{l-1}), using the sigmoid
    derivative in activation form.
    """
    a_out = state.activations[-1]
    if a_out.shape[1] != 1 or len(state.activations) != len(model.weights) + 1:
        raise ValueError("backprop state does not match the model")
    n = a_out.shape[0]
    s_arr = np.asarray(s, dtype=float).reshape(-1)
    if s_arr.shape[0] != n:
        raise ValueError(f"{s_arr.shape[0]} targets for a state of {n} samples")

    delta = np.asarray(evaluate(s_arr, a_out[:, 0], spec).subgrad).reshape(n, 1)
    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.biases)
    for l in range(len(model.weights) - 1, -1, -1):
        a_prev = state.activations[l]
        grads_w[l] = delta.T @ a_prev / n
        grads_b[l] = delta.mean(axis=0)
        if l > 0:
            sig_prime = a_prev * (1.0 - a_prev)
            delta = (delta @ model.weights[l]) * sig_prime
    return GradientSet(grads_w, grads_b)


def _sgd_step(model: MLPModel, grads: GradientSet, eta: float, l2: float) -> None:
    for w, b, gw, gb in zip(model.weights, model.biases, grads.weights, grads.biases):
        if l2 > 0.0:
            gw = gw + 2.0 * l2 * w
        w -= eta * gw
        b -= eta * gb


class _AdamState:
    def __init__(self, model: MLPModel, beta1=0.9, beta2=0.999, eps=1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = [np.zeros_like(w) for w in model.weights] + [
            np.zeros_like(b) for b in model.biases
        ]
        self.v = [np.zeros_like(x) for x in self.m]

    def step(self, model: MLPModel, grads: GradientSet, eta: float, l2: float) -> None:
        self.t += 1
        params = list(model.weights) + list(model.biases)
        gs = list(grads.weights) + list(grads.biases)
        n_w = len(model.weights)
        for k, (p, g) in enumerate(zip(params, gs)):
            if l2 > 0.0 and k < n_w:
                g = g + 2.0 * l2 * p
            self.m[k] = self.beta1 * self.m[k] + (1 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1 - self.beta2) * g * g
            m_hat = self.m[k] / (1 - self.beta1**self.t)
            v_hat = self.v[k] / (1 - self.beta2**self.t)
            p -= eta * m_hat / (np.sqrt(v_hat) + self.eps)


def fit_sgd(
    dataset,
    spec: LossSpec,
    arch,
    config: TrainConfig,
    optimizer: str = "sgd",
) -> tuple[MLPModel, TrainTrace]:
    """Mini-batch training with a per-run fixed permutation and early stopping.

    arch is the full layer-size list [p, h1, h2, 1].  Stopping rules and the
    best-validation snapshot mirror the linear trainer.
    """
    if optimizer not in ("sgd", "adam"):
        raise ValueError(f"unknown optimizer {optimizer!r}")
    X = np.asarray(dataset.features, dtype=float)
    s = np.asarray(dataset.sales, dtype=float)
    n, p = X.shape
    if list(arch)[0] != p:
        raise ValueError(f"architecture expects {list(arch)[0]} inputs, data has {p}")
    if n < 2:
        raise ValueError("need at least two rows to hold out a validation split")

    rng = np.random.default_rng(config.seed)
    train_idx, val_idx = train_val_split(n, config, rng)
    if config.batch_size > train_idx.shape[0]:
        raise ValueError(
            f"batch size {config.batch_size} exceeds training split size "
            f"{train_idx.shape[0]}"
        )
    # One permutation per run, reused on every pass.
    order = rng.permutation(train_idx) if config.shuffle else train_idx

    model = init_mlp(list(arch), seed=config.seed)
    best = model.copy()
    adam = _AdamState(model) if optimizer == "adam" else None
    stopper = EarlyStopper(config.patience, config.tolerance)
    trace = TrainTrace()
    started = time.perf_counter()

    for epoch in range(1, config.max_epochs + 1):
        for k, batch in enumerate(batches(order, config.batch_size)):
            _, state = forward(model, X[batch])
            grads = backward(model, state, s[batch], spec)
            if adam is None:
                _sgd_step(model, grads, config.eta, config.l2)
            else:
                adam.step(model, grads, config.eta, config.l2)
            if not all(np.all(np.isfinite(w)) for w in model.weights):
                raise DivergenceError(
                    f"non-finite parameters at epoch {epoch}, batch {k}"
                )

        train_pred, _ = forward(model, X[train_idx])
        val_pred, _ = forward(model, X[val_idx])
        train_loss = batch_loss(s[train_idx], train_pred, spec)
        val_loss = batch_loss(s[val_idx], val_pred, spec)
        if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
            raise DivergenceError(f"non-finite loss at epoch {epoch}, batch -1")
        trace.train_loss.append(train_loss)
        trace.val_loss.append(val_loss)
        trace.epochs_run = epoch

        if stopper.update(val_loss, epoch):
            best = model.copy()
        if val_loss < BASELINE_LOSS:
            trace.stop_reason = "baseline"
            break
        if stopper.should_stop:
            trace.stop_reason = "patience"
            break

    trace.best_epoch = stopper.best_epoch
    trace.fit_seconds = time.perf_counter() - started
    return best, trace


def parameter_distance(a: MLPModel, b: MLPModel) -> float:
    """Euclidean distance between two parameter vectors of identical shape."""
    return float(np.linalg.norm(a.flatten() - b.flatten()))


def uas_bound(alpha: float, eta: float, n: int, k_passes: int) -> float:
    """Parameter-distance bound 2 max(a, 1-a) (eta sqrt(nK) + 2 eta K)."""
    peak = max(alpha, 1.0 - alpha)
    return 2.0 * peak * (eta * np.sqrt(n * k_passes) + 2.0 * eta * k_passes)


def _plain_sgd_passes(X, s, spec, arch, eta, k_passes, seed):
    """Single-sample SGD for exactly k passes over a fixed permutation."""
    model = init_mlp(list(arch), seed=seed)
    order = np.random.default_rng(seed).permutation(X.shape[0])
    for _ in range(k_passes):
        for i in order:
            _, state = forward(model, X[i : i + 1])
            grads = backward(model, state, s[i : i + 1], spec)
            _sgd_step(model, grads, eta, 0.0)
    return model


def uas_probe(
    dataset,
    spec: LossSpec,
    arch,
    config: TrainConfig,
    swap_index: int,
    k_passes: int,
    replacement=None,
) -> float:
    """Parameter distance between runs on S and on S with one row replaced.

    Both runs share the initialization, the sample permutation, and a
    constant learning rate; training is single-sample SGD for exactly
    k_passes passes with no validation split.  replacement is the fresh
    (features, sale) row; None leaves the dataset unchanged, in which case
    the distance is exactly zero.
    """
    X = np.asarray(dataset.features, dtype=float)
    s = np.asarray(dataset.sales, dtype=float)
    n = X.shape[0]
    if not 0 <= swap_index < n:
        raise IndexError(f"swap index {swap_index} outside dataset of {n} rows")

    X_swapped, s_swapped = X.copy(), s.copy()
    if replacement is not None:
        row, sale = replacement
        X_swapped[swap_index] = np.asarray(row, dtype=float)
        s_swapped[swap_index] = float(sale)

    base = _plain_sgd_passes(X, s, spec, arch, config.eta, k_passes, config.seed)
    other = _plain_sgd_passes(
        X_swapped, s_swapped, spec, arch, config.eta, k_passes, config.seed
    )
    return parameter_distance(base, other)


# Serialization: layer sizes on the first line, then each layer's weight
# matrix in row-major order followed by its bias vector, one value per line.


def to_text(model: MLPModel) -> str:
    lines = [" ".join(str(k) for k in model.layer_sizes)]
    for w, b in zip(model.weights, model.biases):
        lines.extend(f"{v:.17g}" for v in w.ravel())
        lines.extend(f"{v:.17g}" for v in b)
    return "\n".join(lines) + "\n"


def from_text(text: str) -> MLPModel:
    lines = text.strip().splitlines()
    if not lines:
        raise ValueError("empty network record")
    sizes = [int(tok) for tok in lines[0].split()]
    values = [float(tok) for line in lines[1:] for tok in line.split()]
    weights, biases = [], []
    pos = 0
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        w_count = fan_out * fan_in
        weights.append(np.array(values[pos : pos + w_count]).reshape(fan_out, fan_in))
        pos += w_count
        biases.append(np.array(values[pos : pos + fan_out]))
        pos += fan_out
    if pos != len(values):
        raise ValueError(f"record holds {len(values)} values, expected {pos}")
    return MLPModel(sizes, weights, biases)


def save_model(model: MLPModel, path) -> None:
    Path(path).write_text(to_text(model))


def load_model(path) -> MLPModel:
    return from_text(Path(path).read_text())
