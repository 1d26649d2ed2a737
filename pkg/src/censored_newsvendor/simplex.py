"""Dense two-phase simplex solver and the LP form of band-insensitive regression.

LPs are stated as  min c.x  subject to  A x <= b,  x >= 0  (dense arrays).
The solver adds slacks, crashes an initial basis from unit columns where the
structure provides one, and falls back to phase-1 artificial variables
otherwise.  Pivoting uses Dantzig's rule until the objective stalls, then
switches permanently to Bland's rule, which cannot cycle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg.blas import dger

from .losses import EPS_NV, ConfigurationError, LossSpec

OPTIMAL = "optimal"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"
INFEASIBLE = "infeasible"

_PIVOT_TOL = 1e-9
_COST_TOL = 1e-9
_STALL_LIMIT = 24  # degenerate pivots before switching to Bland's rule


@dataclass
class StandardLP:
    """min cost.x s.t. constraint_matrix @ x <= rhs, x >= 0."""

    cost: np.ndarray
    constraint_matrix: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        self.cost = np.asarray(self.cost, dtype=float)
        self.constraint_matrix = np.atleast_2d(
            np.asarray(self.constraint_matrix, dtype=float)
        )
        self.rhs = np.asarray(self.rhs, dtype=float)
        m, n = self.constraint_matrix.shape
        if self.cost.shape != (n,):
            raise ValueError(
                f"cost has length {self.cost.shape}, constraint matrix has {n} columns"
            )
        if self.rhs.shape != (m,):
            raise ValueError(
                f"rhs has length {self.rhs.shape}, constraint matrix has {m} rows"
            )

    @property
    def n_vars(self) -> int:
        return self.constraint_matrix.shape[1]

    @property
    def n_constraints(self) -> int:
        return self.constraint_matrix.shape[0]


@dataclass
class LPSolution:
    x: np.ndarray
    objective: float
    status: str
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def default_iteration_limit(lp: StandardLP) -> int:
    return 50 * (lp.n_vars + lp.n_constraints)


def build_eps_nv_lp(dataset, spec: LossSpec) -> StandardLP:
    """Encode mean band-insensitive regression loss minimization as an LP.

    Variables are laid out as [o (n), u (n), theta+ (p), theta- (p)]: o_i is
    the overage excess (x_i.theta - s_i - eps1)^+, u_i the underage shortfall
    (s_i + eps2 - x_i.theta)^+, and the free coefficient vector is split into
    nonnegative parts.  That gives 2n + 2p nonnegative variables and 2n
    inequality rows; the objective is (1/n) sum[(1-a) o_i + a u_i].
    """
    if spec.kind != EPS_NV:
        raise ConfigurationError(f"LP construction requires an {EPS_NV} spec")
    X = np.asarray(dataset.features, dtype=float)
    s = np.asarray(dataset.sales, dtype=float)
    n, p = X.shape
    if n < 1 or p < 1:
        raise ValueError("dataset must have at least one row and one feature")

    zeros_nn = np.zeros((n, n))
    eye = np.eye(n)
    # Row block 1: x.theta - o_i <= s_i + eps1
    # Row block 2: -x.theta - u_i <= -(s_i + eps2)
    A = np.block(
        [
            [-eye, zeros_nn, X, -X],
            [zeros_nn, -eye, -X, X],
        ]
    )
    b = np.concatenate([s + spec.eps1, -(s + spec.eps2)])
    c = np.concatenate(
        [
            np.full(n, (1.0 - spec.alpha) / n),
            np.full(n, spec.alpha / n),
            np.zeros(2 * p),
        ]
    )
    return StandardLP(cost=c, constraint_matrix=A, rhs=b)


def extract_theta(solution: LPSolution, n_rows: int, p: int) -> np.ndarray:
    """Recover the free coefficient vector from the split-variable layout."""
    x = solution.x
    if x.shape[0] != 2 * n_rows + 2 * p:
        raise ValueError(
            f"solution has {x.shape[0]} variables, expected {2 * n_rows + 2 * p}"
        )
    return x[2 * n_rows : 2 * n_rows + p] - x[2 * n_rows + p :]


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    # rank-1 update in place; T is Fortran-ordered so dger avoids a copy
    T[row] /= T[row, col]
    factors = -T[:, col].copy()
    factors[row] = 0.0
    dger(1.0, factors, T[row].copy(), a=T, overwrite_a=1)
    T[:, col] = 0.0
    T[row, col] = 1.0


def _ratio_test(T: np.ndarray, col: int, basis: list[int], bland: bool) -> int:
    """Leaving row by minimum ratio; ties broken by Bland (smallest basic index)."""
    column = T[:-1, col]
    rhs = T[:-1, -1]
    eligible = column > _PIVOT_TOL
    if not eligible.any():
        return -1
    ratios = np.full(column.shape, np.inf)
    ratios[eligible] = rhs[eligible] / column[eligible]
    best = ratios.min()
    tied = np.flatnonzero(ratios <= best + 1e-12)
    if bland and tied.size > 1:
        return int(min(tied, key=lambda r: basis[r]))
    return int(tied[0])


def _iterate(
    T: np.ndarray,
    basis: list[int],
    allowed: np.ndarray,
    max_iters: int,
    iters_used: int,
) -> tuple[str, int]:
    """Run simplex pivots on tableau T until optimal/unbounded/limit."""
    bland = False
    stall = 0
    iterations = iters_used
    while True:
        red = T[-1, :-1]
        candidates = np.flatnonzero(allowed & (red < -_COST_TOL))
        if candidates.size == 0:
            return OPTIMAL, iterations
        if bland:
            col = int(candidates[0])
        else:
            col = int(candidates[np.argmin(red[candidates])])
        row = _ratio_test(T, col, basis, bland)
        if row < 0:
            return UNBOUNDED, iterations
        if iterations >= max_iters:
            return ITERATION_LIMIT, iterations
        before = T[-1, -1]
        _pivot(T, row, col)
        basis[row] = col
        iterations += 1
        # The stored corner value is -objective, so progress pushes it up;
        # degenerate pivots leave it unchanged.
        if not bland:
            if T[-1, -1] <= before + 1e-12:
                stall += 1
                if stall >= _STALL_LIMIT:
                    bland = True
            else:
                stall = 0


def _install_cost_row(T: np.ndarray, cost: np.ndarray, basis: list[int]) -> None:
    T[-1, :] = 0.0
    T[-1, : cost.shape[0]] = cost
    for i, j in enumerate(basis):
        cj = T[-1, j]
        if cj != 0.0:
            T[-1] -= cj * T[i]


def solve_simplex(lp: StandardLP, max_iters: int | None = None) -> LPSolution:
    """Solve the LP; on success the reported objective is recomputed as c.x."""
    if max_iters is None:
        max_iters = default_iteration_limit(lp)
    m, n = lp.n_constraints, lp.n_vars

    A = lp.constraint_matrix.copy()
    b = lp.rhs.copy()
    signs = np.where(b < 0, -1.0, 1.0)
    A *= signs[:, None]
    b *= signs

    # Equality form: A x + S slack = b with S = diag(signs).
    A_eq = np.hstack([A, np.diag(signs)])
    n_cols = n + m

    # Crash a basis: slacks cover non-flipped rows; flipped rows may still own
    # a singleton positive column (only nonzero entry in that row).
    basis = [-1] * m
    taken = np.zeros(n_cols, dtype=bool)
    for i in range(m):
        if signs[i] > 0:
            basis[i] = n + i
            taken[n + i] = True
    nonzero_rows = np.abs(A_eq) > _PIVOT_TOL
    col_counts = nonzero_rows.sum(axis=0)
    for i in range(m):
        if basis[i] >= 0:
            continue
        singletons = np.flatnonzero(
            (col_counts == 1) & nonzero_rows[i] & (A_eq[i] > _PIVOT_TOL) & ~taken
        )
        if singletons.size:
            j = int(singletons[0])
            basis[i] = j
            taken[j] = True
    art_rows = [i for i in range(m) if basis[i] < 0]
    n_art = len(art_rows)

    T = np.zeros((m + 1, n_cols + n_art + 1), order="F")
    T[:m, :n_cols] = A_eq
    T[:m, -1] = b
    for k, i in enumerate(art_rows):
        T[i, n_cols + k] = 1.0
        basis[i] = n_cols + k
    for i in range(m):
        coef = T[i, basis[i]]
        if coef != 1.0:
            T[i] /= coef

    allowed = np.ones(n_cols + n_art, dtype=bool)
    iterations = 0

    if n_art:
        phase1_cost = np.zeros(n_cols + n_art)
        phase1_cost[n_cols:] = 1.0
        _install_cost_row(T, phase1_cost, basis)
        status, iterations = _iterate(T, basis, allowed, max_iters, iterations)
        if status == ITERATION_LIMIT:
            return LPSolution(np.zeros(n), np.nan, ITERATION_LIMIT, iterations)
        if -T[-1, -1] > 1e-7:
            return LPSolution(np.zeros(n), np.nan, INFEASIBLE, iterations)
        # Drive leftover artificials out of the basis where possible.
        for i in range(m):
            if basis[i] >= n_cols:
                pivots = np.flatnonzero(np.abs(T[i, :n_cols]) > _PIVOT_TOL)
                if pivots.size:
                    _pivot(T, i, int(pivots[0]))
                    basis[i] = int(pivots[0])
        allowed[n_cols:] = False

    cost_full = np.zeros(n_cols + n_art)
    cost_full[:n] = lp.cost
    _install_cost_row(T, cost_full, basis)
    status, iterations = _iterate(T, basis, allowed, max_iters, iterations)
    if status != OPTIMAL:
        return LPSolution(np.zeros(n), np.nan, status, iterations)

    x_full = np.zeros(n_cols + n_art)
    for i, j in enumerate(basis):
        x_full[j] = T[i, -1]
    x = x_full[:n]
    return LPSolution(x, float(lp.cost @ x), OPTIMAL, iterations)
