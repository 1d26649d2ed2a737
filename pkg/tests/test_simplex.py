"""Simplex solver correctness against brute-force grid oracles."""

import numpy as np
import pytest

from censored_newsvendor.data import Dataset
from censored_newsvendor.losses import LossSpec, batch_loss
from censored_newsvendor.simplex import (
    ITERATION_LIMIT,
    OPTIMAL,
    UNBOUNDED,
    StandardLP,
    build_eps_nv_lp,
    default_iteration_limit,
    extract_theta,
    solve_simplex,
)


def _grid_values_1d(X, s, spec, grid):
    preds = np.outer(grid, X[:, 0])
    from censored_newsvendor.losses import evaluate

    values = np.asarray(evaluate(s[None, :], preds, spec).value)
    return values.mean(axis=1)


def grid_minimum(dataset, spec, lo=-2.0, hi=3.0, step=1e-4):
    """Brute-force loss minimum over a theta grid (oracle, p <= 2).

    p == 1 scans the full fine grid; p == 2 scans a coarse full grid and
    refines around its argmin (safe here: the objective is convex)."""
    from censored_newsvendor.losses import evaluate

    X, s = dataset.features, dataset.sales
    if X.shape[1] == 1:
        grid = np.arange(lo, hi + step, step)
        return float(_grid_values_1d(X, s, spec, grid).min())

    def scan(ga, gb):
        best, arg = np.inf, (ga[0], gb[0])
        for a in ga:
            preds = a * X[:, 0][None, :] + np.outer(gb, X[:, 1])
            values = np.asarray(evaluate(s[None, :], preds, spec).value).mean(axis=1)
            k = int(values.argmin())
            if values[k] < best:
                best, arg = float(values[k]), (a, gb[k])
        return best, arg

    coarse = 2e-3
    best, (a0, b0) = scan(
        np.arange(lo, hi + coarse, coarse), np.arange(lo, hi + coarse, coarse)
    )
    fine, _ = scan(
        np.arange(a0 - 3 * coarse, a0 + 3 * coarse, step),
        np.arange(b0 - 3 * coarse, b0 + 3 * coarse, step),
    )
    return min(best, fine)


class TestTextbookLPs:
    def test_one_variable(self):
        lp = StandardLP(np.array([-1.0]), np.array([[1.0]]), np.array([1.0]))
        sol = solve_simplex(lp)
        assert sol.status == OPTIMAL
        assert sol.x == pytest.approx([1.0])
        assert sol.objective == pytest.approx(-1.0)

    def test_two_variable(self):
        # max x+y s.t. x+2y<=4, 3x+y<=6  ->  x=1.6, y=1.2
        lp = StandardLP(
            np.array([-1.0, -1.0]),
            np.array([[1.0, 2.0], [3.0, 1.0]]),
            np.array([4.0, 6.0]),
        )
        sol = solve_simplex(lp)
        assert sol.status == OPTIMAL
        assert sol.x == pytest.approx([1.6, 1.2])

    def test_unbounded(self):
        lp = StandardLP(np.array([-1.0]), np.array([[-1.0]]), np.array([1.0]))
        assert solve_simplex(lp).status == UNBOUNDED

    def test_negative_rhs_feasible(self):
        # x >= 2 written as -x <= -2, min x -> 2 (needs phase 1 or a crash basis)
        lp = StandardLP(np.array([1.0]), np.array([[-1.0]]), np.array([-2.0]))
        sol = solve_simplex(lp)
        assert sol.status == OPTIMAL
        assert sol.x == pytest.approx([2.0])

    def test_infeasible(self):
        # x <= 1 and x >= 2
        lp = StandardLP(
            np.array([0.0]), np.array([[1.0], [-1.0]]), np.array([1.0, -2.0])
        )
        assert solve_simplex(lp).status == "infeasible"

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            StandardLP(np.array([1.0, 2.0]), np.array([[1.0]]), np.array([1.0]))


class TestBandRegressionLP:
    def test_variable_and_row_counts(self):
        ds = Dataset(np.ones((3, 2)), np.array([1.0, 2.0, 3.0]))
        lp = build_eps_nv_lp(ds, LossSpec.eps_nv(0.5, 0.2))
        assert lp.n_vars == 10  # 2n + 2p
        assert lp.n_constraints == 6  # 2n

    def test_single_point_inside_band_costs_nothing(self):
        ds = Dataset(np.array([[1.0]]), np.array([1.0]))
        spec = LossSpec.eps_nv(0.5, 0.2, 0.0)
        sol = solve_simplex(build_eps_nv_lp(ds, spec))
        assert sol.status == OPTIMAL
        assert sol.objective == pytest.approx(0.0, abs=1e-12)
        theta = extract_theta(sol, 1, 1)
        assert 1.0 - 1e-9 <= theta[0] <= 1.2 + 1e-9

    def test_two_point_instance_matches_grid(self):
        ds = Dataset(np.array([[1.0], [1.0]]), np.array([0.0, 1.0]))
        spec = LossSpec.eps_nv(0.5, 0.2, 0.0)
        sol = solve_simplex(build_eps_nv_lp(ds, spec))
        oracle = grid_minimum(ds, spec, lo=-1.0, hi=2.0, step=1e-4)
        assert sol.objective == pytest.approx(oracle, abs=1e-4)
        assert sol.objective == pytest.approx(0.2, abs=1e-9)  # hand evaluation

    def test_objective_identity(self):
        rng = np.random.default_rng(5)
        ds = Dataset(
            np.hstack([np.ones((12, 1)), rng.normal(size=(12, 1))]),
            rng.uniform(0, 1, 12),
        )
        spec = LossSpec.eps_nv(0.7, 0.15, 0.03)
        sol = solve_simplex(build_eps_nv_lp(ds, spec))
        theta = extract_theta(sol, 12, 2)
        assert sol.objective == pytest.approx(
            batch_loss(ds.sales, ds.features @ theta, spec), abs=1e-8
        )

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError):
            build_eps_nv_lp(
                Dataset(np.zeros((0, 1)), np.zeros(0)), LossSpec.eps_nv(0.5, 0.1)
            )

    def test_oracle_agreement_many_instances(self):
        rng = np.random.default_rng(123)
        for trial in range(50):
            n = int(rng.integers(2, 21))
            p = int(rng.integers(1, 3))
            X = np.hstack([np.ones((n, 1)), rng.uniform(-1, 1, (n, p - 1))])
            s = rng.uniform(0, 1, n)
            ds = Dataset(X, s)
            alpha = float(rng.uniform(0.2, 0.9))
            spec = LossSpec.eps_nv(alpha, float(rng.uniform(0.05, 0.3)), 0.01)
            lp = build_eps_nv_lp(ds, spec)
            sol = solve_simplex(lp, max_iters=default_iteration_limit(lp))
            assert sol.status == OPTIMAL, f"trial {trial}: {sol.status}"
            oracle = grid_minimum(ds, spec)
            assert sol.objective <= oracle + 1e-6, f"trial {trial}"
            assert sol.objective >= oracle - 1e-3, f"trial {trial}"

    def test_never_hits_iteration_limit_at_default_budget(self):
        rng = np.random.default_rng(77)
        for n in (5, 30, 80):
            X = np.hstack([np.ones((n, 1)), rng.uniform(-1, 1, (n, 2))])
            ds = Dataset(X, rng.uniform(0, 1, n))
            lp = build_eps_nv_lp(ds, LossSpec.eps_nv(0.55, 0.1976, 0.0022))
            sol = solve_simplex(lp)
            assert sol.status != ITERATION_LIMIT
            assert sol.iterations < default_iteration_limit(lp)

    def test_feasibility_of_reported_optimum(self):
        rng = np.random.default_rng(9)
        X = np.hstack([np.ones((15, 1)), rng.normal(size=(15, 2))])
        ds = Dataset(X, rng.uniform(0, 1, 15))
        lp = build_eps_nv_lp(ds, LossSpec.eps_nv(0.6, 0.2, 0.02))
        sol = solve_simplex(lp)
        assert sol.status == OPTIMAL
        assert np.all(lp.constraint_matrix @ sol.x <= lp.rhs + 1e-8)
        assert np.all(sol.x >= -1e-9)
