"""Exact ground-truth computation on desk-scale instances.

A self-contained dense simplex solver (Bland's rule, so pivoting is
deterministic and cycle-free) backs three routes to the lexifair values:
the production-facing recursion over subset-sum constraints, a minimax
solver, and an independent sort-pattern recursion that follows the
"j-th highest error" definition literally. Subset constraints are generated
explicitly here, which is only viable at oracle scale (small K).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from itertools import combinations, permutations

import numpy as np

from .core import GroupedDataset

_TOL = 1e-9
_PIVOT_TOL = 1e-11


class LPError(RuntimeError):
    """Solver failure (cycling guard, numerical breakdown)."""


class LPInfeasible(LPError):
    """The linear program has no feasible point."""


@dataclass(frozen=True)
class LossMatrix:
    """Per-group losses of a finite hypothesis list: entry (k, h) = L_k(h)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.size == 0:
            raise ValueError("loss matrix must be a non-empty 2-d array")
        if not np.isfinite(v).all() or (v < 0).any():
            raise ValueError("loss matrix entries must be finite and non-negative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def K(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_csv(cls, path) -> "LossMatrix":
        rows = []
        with open(path, newline="") as fh:
            for rownum, row in enumerate(csv.reader(fh), start=1):
                if not row:
                    continue
                try:
                    rows.append([float(v) for v in row])
                except ValueError as exc:
                    raise ValueError(f"{path}:{rownum}: {exc}") from None
        if not rows or len({len(r) for r in rows}) != 1:
            raise ValueError(f"{path}: need a rectangular numeric matrix")
        return cls(np.array(rows))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            for row in self.values:
                writer.writerow([repr(float(v)) for v in row])


@dataclass(frozen=True)
class LexifairGroundTruth:
    """Exact per-level values and a witness distribution attaining them."""

    gamma: tuple
    opt_sums: tuple
    witness: np.ndarray


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None) -> tuple[np.ndarray, float]:
    """Minimize c.x subject to A_ub x <= b_ub, A_eq x = b_eq, x >= 0.

    Dense two-phase simplex with Bland's rule; built for instances with a few
    hundred constraints at most.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    rows, rhs, n_slack = [], [], 0
    if A_ub is not None:
        A_ub = np.atleast_2d(np.asarray(A_ub, dtype=float))
        b_ub = np.asarray(b_ub, dtype=float)
        n_slack = A_ub.shape[0]
    if A_eq is not None:
        A_eq = np.atleast_2d(np.asarray(A_eq, dtype=float))
        b_eq = np.asarray(b_eq, dtype=float)

    m = (A_ub.shape[0] if A_ub is not None else 0) + (
        A_eq.shape[0] if A_eq is not None else 0
    )
    total = n + n_slack + m  # original + slack + artificial
    A = np.zeros((m, total))
    b = np.zeros(m)
    row = 0
    if A_ub is not None:
        for i in range(A_ub.shape[0]):
            A[row, :n] = A_ub[i]
            A[row, n + i] = 1.0
            b[row] = b_ub[i]
            row += 1
    if A_eq is not None:
        for i in range(A_eq.shape[0]):
            A[row, :n] = A_eq[i]
            b[row] = b_eq[i]
            row += 1
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0
    for i in range(m):
        A[i, n + n_slack + i] = 1.0

    basis = list(range(n + n_slack, total))
    # phase 1: minimize the artificial mass
    cost1 = np.zeros(total)
    cost1[n + n_slack:] = 1.0
    tab = np.hstack([A, b[:, None]])
    obj = np.append(cost1, 0.0)
    obj = obj - cost1[basis] @ tab  # reduced costs for the artificial basis
    _simplex_iterate(tab, obj, basis, blocked=())
    if -obj[-1] > 1e-7:
        raise LPInfeasible(f"phase-1 optimum {-obj[-1]:.3g} > 0")
    _drive_out_artificials(tab, basis, n + n_slack)

    # phase 2 on the original objective, artificials barred from entering
    cost2 = np.zeros(total)
    cost2[:n] = c
    obj = np.append(cost2, 0.0)
    for r, bv in enumerate(basis):
        obj -= obj[bv] * tab[r]
    _simplex_iterate(tab, obj, basis, blocked=range(n + n_slack, total))

    x = np.zeros(total)
    for r, bv in enumerate(basis):
        x[bv] = tab[r, -1]
    return x[:n], float(c @ x[:n])


def _simplex_iterate(tab, obj, basis, blocked) -> None:
    eligible = np.ones(tab.shape[1] - 1, dtype=bool)
    eligible[list(blocked)] = False
    max_iter = 50 * (tab.shape[0] + tab.shape[1])
    for _ in range(max_iter):
        candidates = np.flatnonzero(eligible & (obj[:-1] < -_PIVOT_TOL))
        if candidates.size == 0:
            return
        entering = int(candidates[0])  # Bland: smallest eligible index
        col = tab[:, entering]
        positive = col > _PIVOT_TOL
        if not positive.any():
            raise LPError("objective unbounded below")
        ratios = np.full(tab.shape[0], np.inf)
        ratios[positive] = tab[positive, -1] / col[positive]
        ties = np.flatnonzero(ratios <= ratios.min() + _PIVOT_TOL)
        basis_arr = np.asarray(basis)
        leaving = int(ties[np.argmin(basis_arr[ties])])
        _pivot(tab, obj, leaving, entering)
        basis[leaving] = entering
    raise LPError("simplex iteration limit reached")


def _pivot(tab, obj, row, col) -> None:
    tab[row] /= tab[row, col]
    for r in range(tab.shape[0]):
        if r != row and tab[r, col] != 0.0:
            tab[r] -= tab[r, col] * tab[row]
    if obj[col] != 0.0:
        obj -= obj[col] * tab[row]


def _drive_out_artificials(tab, basis, first_artificial) -> None:
    for r in range(tab.shape[0]):
        if basis[r] >= first_artificial:
            pivot_col = -1
            for col in range(first_artificial):
                if abs(tab[r, col]) > _PIVOT_TOL:
                    pivot_col = col
                    break
            if pivot_col >= 0:
                dummy = np.zeros(tab.shape[1])
                _pivot(tab, dummy, r, pivot_col)
                basis[r] = pivot_col
            # else: redundant row, harmless to keep with its artificial at 0


def _pareto_columns(V: np.ndarray, tol: float = 1e-12) -> list:
    """Indices of columns no other column weakly dominates.

    Dominated columns are never needed by the level programs: moving their
    mass to a dominator weakly decreases every group error, and all
    constraints and objectives are monotone in the group errors. Scanning in
    column-sum order guarantees any dominator is met before its victim, so
    one pass against the running front suffices.
    """
    order = np.argsort(V.sum(axis=0), kind="stable")
    front = np.empty((V.shape[0], V.shape[1]))
    count = 0
    keep = []
    for i in order:
        col = V[:, i]
        if count and bool((front[:, :count] <= col[:, None] + tol).all(axis=0).any()):
            continue
        front[:, count] = col
        count += 1
        keep.append(int(i))
    keep.sort()
    return keep


def _subset_rows(M: np.ndarray, r: int) -> tuple[list, np.ndarray]:
    subsets = list(combinations(range(M.shape[0]), r))
    return subsets, np.array([M[list(s)].sum(axis=0) for s in subsets])


def _check_witness(p, M, level_bounds) -> None:
    errors = M @ p
    if abs(p.sum() - 1.0) > _TOL or (p < -_TOL).any():
        raise LPError("witness is not a distribution")
    for r, bound in enumerate(level_bounds, start=1):
        for s in combinations(range(M.shape[0]), r):
            if errors[list(s)].sum() > bound + 10 * _TOL:
                raise LPError(f"witness violates a level-{r} constraint")


def _level_lp(V: np.ndarray, bounds, j: int, pad: float) -> tuple[np.ndarray, float]:
    """Solve one level: min t s.t. earlier r-subset sums <= bounds[r-1] + pad
    and every j-subset sum <= t, over distributions p. Returns (p, t)."""
    m = V.shape[1]
    rows, rhs = [], []
    for r, bound in enumerate(bounds, start=1):
        _, sums = _subset_rows(V, r)
        for srow in sums:
            rows.append(np.append(srow, 0.0))
            rhs.append(bound + pad)
    _, sums = _subset_rows(V, j)
    for srow in sums:
        rows.append(np.append(srow, -1.0))
        rhs.append(0.0)
    c = np.zeros(m + 1)
    c[m] = 1.0
    A_eq = np.append(np.ones(m), 0.0)[None, :]
    x, value = solve_lp(c, np.array(rows), np.array(rhs), A_eq, np.array([1.0]))
    return x[:m], value


def minimax_value(M: LossMatrix) -> tuple[float, np.ndarray]:
    """Exact minimax group error over mixtures of the columns."""
    truth = exact_lexifair_lp(M, 1)
    return truth.opt_sums[0], truth.witness


def exact_lexifair_lp(M: LossMatrix, ell: int) -> LexifairGroundTruth:
    """Sequential LPs instantiating the subset-sum recursion with exact values.

    Level j minimizes t over distributions p subject to all r-subset sums
    being at most OPT_r for r < j and all j-subset sums at most t.
    """
    if not 1 <= ell <= M.K:
        raise ValueError(f"ell={ell} out of range 1..{M.K}")
    keep = _pareto_columns(M.values)
    V = M.values[:, keep]
    opts: list[float] = []
    witness = None
    for j in range(1, ell + 1):
        try:
            x, value = _level_lp(V, opts, j, pad=0.0)
        except LPInfeasible:
            # earlier-level bounds can be degenerate-tight in floating point;
            # pad them minimally before declaring a solver failure
            try:
                x, value = _level_lp(V, opts, j, pad=_TOL)
            except LPInfeasible as exc:
                raise LPError(
                    f"level-{j} program infeasible given exact earlier values; "
                    f"solver tolerance failure: {exc}"
                ) from exc
        witness = x
        opts.append(value)
        _check_witness(witness, V, opts[:-1] + [value])
    gamma = tuple(
        opts[i] - (opts[i - 1] if i else 0.0) for i in range(len(opts))
    )
    full_witness = np.zeros(M.cols)
    full_witness[keep] = witness
    return LexifairGroundTruth(gamma, tuple(opts), full_witness)


def relaxed_third_level(M: LossMatrix, slack: float) -> float:
    """Level-3 gamma value when the level-1 bound is loosened by ``slack``.

    Re-runs the LP sequence with the minimax bound replaced by gamma_1 + slack
    and returns the difference of the resulting level-3 and level-2 sums,
    i.e. the third-highest group error the relaxation forces.
    """
    if M.K != 3:
        raise ValueError("the relaxed recursion is defined for 3-group instances")
    V = M.values
    gamma1 = exact_lexifair_lp(M, 1).opt_sums[0]
    bounds = [gamma1 + slack]
    for j in (2, 3):
        try:
            _, value = _level_lp(V, bounds, j, pad=0.0)
        except LPInfeasible:
            _, value = _level_lp(V, bounds, j, pad=_TOL)
        bounds.append(value)
    return bounds[2] - bounds[1]


def definition1_gamma(M: LossMatrix, ell: int) -> tuple:
    """Independent recursion on the sorted error positions.

    Enumerates every ordering of the groups; under a fixed ordering the
    "j-th highest error" is a single linear functional, so each level is a
    minimum of small LPs over order-consistent distributions whose top
    positions are pinned to the earlier exact values. Verifies the recursion
    without ever forming subset-sum constraints.
    """
    if not 1 <= ell <= M.K:
        raise ValueError(f"ell={ell} out of range 1..{M.K}")
    V = M.values
    K, m = M.K, M.cols
    gammas: list[float] = []
    for j in range(1, ell + 1):
        best = np.inf
        for perm in permutations(range(K)):
            value = None
            for pad in (0.0, _TOL):
                rows, rhs = [], []
                for a, b in zip(perm[:-1], perm[1:]):
                    rows.append(V[b] - V[a])  # errors sorted along the ordering
                    rhs.append(0.0)
                for r in range(1, j):
                    rows.append(V[perm[r - 1]])
                    rhs.append(gammas[r - 1] + pad)
                c = V[perm[j - 1]]
                A_eq = np.ones((1, m))
                try:
                    _, value = solve_lp(
                        c, np.array(rows), np.array(rhs), A_eq, np.array([1.0])
                    )
                    break
                except LPInfeasible:
                    continue
            if value is None:
                continue
            best = min(best, value)
        if not np.isfinite(best):
            raise LPError(f"no ordering feasible at level {j}")
        gammas.append(best)
    return tuple(gammas)


def loss_matrix_from_classifiers(dataset: GroupedDataset, classifiers) -> LossMatrix:
    """Per-group zero-one errors of a finite classifier list."""
    cols = []
    for h in classifiers:
        losses = (h.predict(dataset.X) != dataset.y).astype(float)
        cols.append(dataset.membership.T @ losses / dataset.group_sizes)
    return LossMatrix(np.array(cols).T)


def loss_matrix_from_predictions(dataset: GroupedDataset, predictions) -> LossMatrix:
    """Per-group zero-one errors from an (n, m) 0/1 prediction matrix."""
    P = np.asarray(predictions, dtype=float)
    if P.ndim != 2 or P.shape[0] != dataset.n:
        raise ValueError("predictions must be (n, m)")
    losses = np.abs(P - dataset.y[:, None])
    return LossMatrix((dataset.membership.T @ losses) / dataset.group_sizes[:, None])


def loss_matrix_from_thetas(dataset: GroupedDataset, loss, thetas) -> LossMatrix:
    """Per-group losses of a finite parameter list (theta-grid oracle input)."""
    cols = []
    for theta in thetas:
        losses = loss.point_losses(np.asarray(theta, dtype=float), dataset.X, dataset.y)
        cols.append(dataset.membership.T @ losses / dataset.group_sizes)
    return LossMatrix(np.array(cols).T)
