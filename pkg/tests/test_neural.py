"""Network forward/backward correctness, training behavior, stability probe."""

import numpy as np
import pytest

from censored_newsvendor.data import Dataset
from censored_newsvendor.losses import LossSpec, batch_loss
from censored_newsvendor.neural import (
    MLPModel,
    backward,
    fit_sgd,
    forward,
    from_text,
    init_mlp,
    parameter_distance,
    to_text,
    uas_bound,
    uas_probe,
)
from censored_newsvendor.training import TrainConfig


def flat_gradient(grads):
    parts = [g.ravel() for g in grads.weights] + [g.ravel() for g in grads.biases]
    return np.concatenate(parts)


def numeric_gradient(model, x, s, spec, h=1e-5):
    """Central finite differences through the forward pass, one parameter at
    a time (the independent oracle for backward)."""
    out = []
    for arrays in (model.weights, model.biases):
        for arr in arrays:
            g = np.zeros_like(arr)
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                keep = arr[idx]
                arr[idx] = keep + h
                up = batch_loss(s, forward(model, x)[0], spec)
                arr[idx] = keep - h
                down = batch_loss(s, forward(model, x)[0], spec)
                arr[idx] = keep
                g[idx] = (up - down) / (2 * h)
            out.append(g.ravel())
    return np.concatenate(out)


class TestForward:
    def test_all_zero_parameters(self):
        model = MLPModel(
            [2, 3, 2, 1],
            [np.zeros((3, 2)), np.zeros((2, 3)), np.zeros((1, 2))],
            [np.zeros(3), np.zeros(2), np.zeros(1)],
        )
        y, state = forward(model, np.array([4.0, -1.0]))
        assert y == 0.0
        assert np.allclose(state.activations[1], 0.5)  # sigmoid(0)

    def test_single_hidden_node_composition(self):
        w, b = 0.8, 0.3
        model = MLPModel(
            [1, 1, 1],
            [np.zeros((1, 1)), np.array([[w]])],
            [np.zeros(1), np.array([b])],
        )
        y, _ = forward(model, np.array([2.0]))
        assert y == pytest.approx(0.5 * w + b)

    def test_constant_output_via_bias(self):
        model = init_mlp([3, 4, 3, 1], seed=0)
        model.weights[-1][:] = 0.0
        model.biases[-1][:] = 7.5
        y, _ = forward(model, np.random.default_rng(0).normal(size=(5, 3)))
        assert np.allclose(y, 7.5)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            forward(init_mlp([3, 4, 3, 1], seed=0), np.ones(2))


class TestBackward:
    def test_zero_inside_band_means_zero_gradients(self):
        model = init_mlp([2, 4, 3, 1], seed=1)
        x = np.array([1.0, 0.5])
        y, state = forward(model, x)
        spec = LossSpec.eps_nv(0.55, 1.0, 0.0)  # wide band around the output
        grads = backward(model, state, y - 0.5, spec)
        assert np.all(flat_gradient(grads) == 0.0)

    @pytest.mark.parametrize("kind", ["mse", "nvc", "eps_nv"])
    def test_matches_finite_differences(self, kind):
        rng = np.random.default_rng(2)
        specs = {
            "mse": LossSpec.mse(),
            "nvc": LossSpec.nvc(0.65),
            "eps_nv": LossSpec.eps_nv(0.55, 0.1976, 0.0022),
        }
        spec = specs[kind]
        checked = 0
        while checked < 20:
            model = init_mlp([2, 3, 2, 1], seed=int(rng.integers(1 << 30)))
            x = rng.normal(size=(1, 2))
            y, state = forward(model, x)
            s = np.array([y[0] - rng.uniform(-0.8, 0.8)])
            kinks = {
                "mse": (s[0],),
                "nvc": (s[0],),
                "eps_nv": (s[0] + spec.eps2, s[0] + spec.eps1),
            }[kind]
            if min(abs(y[0] - k) for k in kinks) < 1e-3:
                continue
            analytic = flat_gradient(backward(model, state, s, spec))
            numeric = numeric_gradient(model, x, s, spec)
            denom = np.maximum(np.abs(numeric), 1e-8)
            assert np.all(np.abs(analytic - numeric) / denom < 1e-4)
            checked += 1

    def test_state_model_mismatch(self):
        a = init_mlp([2, 3, 1], seed=0)
        b = init_mlp([2, 3, 2, 1], seed=0)
        _, state = forward(a, np.ones(2))
        with pytest.raises(ValueError):
            backward(b, state, np.ones(1), LossSpec.mse())


class TestTraining:
    def test_constant_target_reached(self):
        rng = np.random.default_rng(3)
        ds = Dataset(
            np.hstack([np.ones((80, 1)), rng.normal(size=(80, 2))]),
            np.full(80, 0.6),
        )
        config = TrainConfig(eta=0.05, batch_size=20, seed=4, max_epochs=300, patience=300)
        model, _ = fit_sgd(ds, LossSpec.mse(), [3, 4, 3, 1], config)
        preds, _ = forward(model, ds.features)
        assert np.max(np.abs(preds - 0.6)) < 0.02

    def test_identical_seeds_identical_parameters(self):
        rng = np.random.default_rng(5)
        ds = Dataset(
            np.hstack([np.ones((60, 1)), rng.normal(size=(60, 1))]),
            rng.uniform(0, 1, 60),
        )
        config = TrainConfig(eta=0.02, batch_size=15, seed=9, max_epochs=40, patience=40)
        m1, t1 = fit_sgd(ds, LossSpec.nvc(0.7), [2, 4, 3, 1], config)
        m2, t2 = fit_sgd(ds, LossSpec.nvc(0.7), [2, 4, 3, 1], config)
        assert parameter_distance(m1, m2) == 0.0
        assert t1.train_loss == t2.train_loss
        assert t1.val_loss == t2.val_loss

    def test_band_stationarity_for_one_epoch(self):
        # when every training point predicts inside its band, an epoch is a no-op
        rng = np.random.default_rng(6)
        X = np.hstack([np.ones((40, 1)), rng.normal(size=(40, 1))])
        model = init_mlp([2, 4, 3, 1], seed=7)
        preds, _ = forward(model, X)
        s = preds - 0.05  # band [s + 0.0, s + 0.1] contains every prediction
        ds = Dataset(X, s)
        spec = LossSpec.eps_nv(0.55, 0.1, 0.0)
        config = TrainConfig(
            eta=0.05, batch_size=10, seed=7, max_epochs=1, patience=1, tolerance=-1.0
        )
        trained, _ = fit_sgd(ds, spec, [2, 4, 3, 1], config)
        assert parameter_distance(trained, model) == 0.0

    def test_adam_flag(self):
        rng = np.random.default_rng(8)
        ds = Dataset(
            np.hstack([np.ones((50, 1)), rng.normal(size=(50, 1))]),
            rng.uniform(0, 1, 50),
        )
        config = TrainConfig(eta=0.005, batch_size=25, seed=1, max_epochs=30, patience=30)
        model, _ = fit_sgd(ds, LossSpec.mse(), [2, 4, 3, 1], config, optimizer="adam")
        assert all(np.all(np.isfinite(w)) for w in model.weights)
        with pytest.raises(ValueError):
            fit_sgd(ds, LossSpec.mse(), [2, 4, 3, 1], config, optimizer="sign")


class TestUasProbe:
    def test_no_swap_is_zero(self):
        rng = np.random.default_rng(10)
        ds = Dataset(
            np.hstack([np.ones((30, 1)), rng.uniform(0, 1, (30, 2))]),
            rng.uniform(0, 1, 30),
        )
        spec = LossSpec.eps_nv(0.55, 0.2, 0.0)
        config = TrainConfig(eta=1e-3, batch_size=1, seed=2)
        assert uas_probe(ds, spec, [3, 4, 3, 1], config, 5, 2) == 0.0

    def test_bound_example_value(self):
        assert uas_bound(0.55, 1e-3, 100, 3) == pytest.approx(0.0256524, abs=1e-6)

    def test_bound_scales_linearly_in_rate(self):
        assert uas_bound(0.55, 2e-3, 100, 3) == pytest.approx(
            2 * uas_bound(0.55, 1e-3, 100, 3)
        )

    def test_swap_stays_under_bound(self):
        rng = np.random.default_rng(11)
        ds = Dataset(
            np.hstack([np.ones((50, 1)), rng.uniform(0, 1, (50, 2))]),
            rng.uniform(0, 1, 50),
        )
        spec = LossSpec.eps_nv(0.55, 0.1976, 0.0022)
        config = TrainConfig(eta=1e-3, batch_size=1, seed=3)
        replacement = (np.array([1.0, 0.3, 0.9]), 0.4)
        dist = uas_probe(ds, spec, [3, 4, 3, 1], config, 7, 3, replacement=replacement)
        assert 0.0 < dist <= uas_bound(0.55, 1e-3, 50, 3)

    def test_swap_index_range(self):
        ds = Dataset(np.ones((5, 1)), np.ones(5))
        config = TrainConfig(eta=1e-3, batch_size=1)
        with pytest.raises(IndexError):
            uas_probe(ds, LossSpec.nvc(0.5), [1, 4, 3, 1], config, 9, 1)


class TestSerialization:
    def test_round_trip_bit_exact(self):
        model = init_mlp([3, 5, 4, 1], seed=12)
        again = from_text(to_text(model))
        assert again.layer_sizes == model.layer_sizes
        assert parameter_distance(model, again) == 0.0
        for w1, w2 in zip(model.weights, again.weights):
            assert w1.tobytes() == w2.tobytes()

    def test_header_carries_sizes(self):
        text = to_text(init_mlp([2, 4, 3, 1], seed=0))
        assert text.splitlines()[0] == "2 4 3 1"

    def test_truncated_record(self):
        text = to_text(init_mlp([2, 4, 3, 1], seed=0))
        with pytest.raises(ValueError):
            from_text(text[: len(text) // 2])
