"""Shared domain types: grouped datasets, per-group error vectors, dual weights.

Group indices are 0-based everywhere in memory; the CSV format on disk uses
1-based indices in its ``groups`` column.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np


class DatasetError(ValueError):
    """Raised for malformed or inconsistent dataset inputs."""


class BudgetExceeded(RuntimeError):
    """Raised when a scheduled iteration count exceeds the configured budget."""

    def __init__(self, round_index: int, scheduled_t: float, budget: int):
        self.round_index = round_index
        self.scheduled_t = scheduled_t
        self.budget = budget
        super().__init__(
            f"round {round_index} needs T={scheduled_t:.3g} iterations, "
            f"budget is {budget}; raise alpha or the budget"
        )


@dataclass(frozen=True)
class GroupedDataset:
    """Labeled points with possibly overlapping group memberships.

    ``membership`` is an (n, K) boolean matrix; row i flags the groups point i
    belongs to. Every point belongs to at least one group and every group has
    at least one member.
    """

    X: np.ndarray
    y: np.ndarray
    membership: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        m = np.asarray(self.membership, dtype=bool)
        if X.ndim != 2:
            raise DatasetError("features must be a 2-d array")
        n = X.shape[0]
        if y.shape != (n,):
            raise DatasetError("labels must be a length-n vector")
        if m.ndim != 2 or m.shape[0] != n:
            raise DatasetError("membership must be an (n, K) boolean matrix")
        if m.shape[1] == 0 or not m.any(axis=0).all():
            raise DatasetError("every group must have at least one member")
        if not m.any(axis=1).all():
            raise DatasetError("every point must belong to at least one group")
        if not np.isfinite(X).all() or not np.isfinite(y).all():
            raise DatasetError("features and labels must be finite")
        for name, arr in (("X", X), ("y", y), ("membership", m)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def K(self) -> int:
        return self.membership.shape[1]

    @property
    def group_sizes(self) -> np.ndarray:
        return self.membership.sum(axis=0)

    @property
    def n_min(self) -> int:
        return int(self.group_sizes.min())

    def group_indices(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.membership[:, k])

    @classmethod
    def from_arrays(cls, X, y, groups, K: int | None = None) -> "GroupedDataset":
        """Build from per-point group index lists (0-based)."""
        X = np.asarray(X, dtype=float)
        n = X.shape[0]
        if K is None:
            K = 1 + max(max(g) for g in groups)
        m = np.zeros((n, K), dtype=bool)
        for i, g in enumerate(groups):
            for k in g:
                if not 0 <= k < K:
                    raise DatasetError(f"point {i}: group index {k} out of range")
                m[i, k] = True
        return cls(X, y, m)

    @classmethod
    def from_csv(cls, path, classification: bool = False) -> "GroupedDataset":
        """Parse the CSV dataset format.

        Header ``f0,...,f{d-1},label,groups``; ``groups`` holds 1-based,
        ``;``-separated group indices. Malformed rows abort with the row number.
        """
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DatasetError(f"{path}: empty file") from None
            d = len(header) - 2
            expected = [f"f{i}" for i in range(d)] + ["label", "groups"]
            if d < 1 or header != expected:
                raise DatasetError(f"{path}: bad header {header!r}")
            feats, labels, groups = [], [], []
            for rownum, row in enumerate(reader, start=2):
                if len(row) != d + 2:
                    raise DatasetError(f"{path}:{rownum}: expected {d + 2} fields")
                try:
                    feats.append([float(v) for v in row[:d]])
                    labels.append(float(row[d]))
                    idx = [int(tok) for tok in row[d + 1].split(";")]
                except ValueError as exc:
                    raise DatasetError(f"{path}:{rownum}: {exc}") from None
                if any(k < 1 for k in idx):
                    raise DatasetError(f"{path}:{rownum}: group indices are 1-based")
                if classification and labels[-1] not in (0.0, 1.0):
                    raise DatasetError(f"{path}:{rownum}: label must be 0 or 1")
                groups.append([k - 1 for k in idx])
        if not feats:
            raise DatasetError(f"{path}: no data rows")
        return cls.from_arrays(np.array(feats), np.array(labels), groups)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"f{i}" for i in range(self.d)] + ["label", "groups"])
            for i in range(self.n):
                idx = ";".join(str(k + 1) for k in np.flatnonzero(self.membership[i]))
                writer.writerow(
                    [repr(float(v)) for v in self.X[i]] + [repr(float(self.y[i])), idx]
                )


@dataclass(frozen=True)
class GroupErrorVector:
    """Per-group errors plus the permutation sorting them non-increasingly.

    Ties in the sorted view are broken by ascending group index so repeated
    evaluations of the same model yield identical permutations.
    """

    errors: np.ndarray
    _sorted_view: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        e = np.asarray(self.errors, dtype=float)
        if e.ndim != 1 or e.size == 0:
            raise ValueError("errors must be a non-empty vector")
        e.setflags(write=False)
        object.__setattr__(self, "errors", e)
        # primary key: descending error; secondary: ascending group index
        order = np.lexsort((np.arange(e.size), -e))
        order.setflags(write=False)
        object.__setattr__(self, "_sorted_view", order)

    @property
    def K(self) -> int:
        return self.errors.size

    @property
    def sorted_view(self) -> np.ndarray:
        return self._sorted_view

    @property
    def sorted_errors(self) -> np.ndarray:
        return self.errors[self._sorted_view]


def group_errors(evaluator, dataset: GroupedDataset) -> GroupErrorVector:
    """Mean per-point loss over each group (uniform distribution over G_k).

    ``evaluator`` is either a length-n vector of per-point losses or a callable
    ``(X, y) -> losses``.
    """
    if callable(evaluator):
        losses = np.asarray(evaluator(dataset.X, dataset.y), dtype=float)
    else:
        losses = np.asarray(evaluator, dtype=float)
    if losses.shape != (dataset.n,):
        raise ValueError("evaluator must produce one loss per point")
    sums = dataset.membership.T @ losses
    return GroupErrorVector(sums / dataset.group_sizes)


def top_j_sum(ev: GroupErrorVector, j: int) -> float:
    """Sum of the j largest group errors.

    Equals the maximum over all j-subsets of the subset sum; sorting suffices,
    no subset enumeration happens here.
    """
    if not 1 <= j <= ev.K:
        raise ValueError(f"j={j} out of range 1..{ev.K}")
    return float(ev.sorted_errors[:j].sum())


@dataclass(frozen=True)
class DualVector:
    """Sparse non-negative weights over group subsets of size <= j.

    Best-response instances have at most one atom carrying mass exactly
    ``bound``; averaged duals may hold many atoms. The l1 mass never exceeds
    ``bound``.
    """

    atoms: dict
    bound: float
    j: int

    def __post_init__(self):
        if self.bound <= 0:
            raise ValueError("bound must be positive")
        atoms = {}
        for subset, mass in self.atoms.items():
            subset = frozenset(subset)
            if not 1 <= len(subset) <= self.j:
                raise ValueError(f"atom {set(subset)} has cardinality outside 1..{self.j}")
            if mass < 0:
                raise ValueError("atom masses must be non-negative")
            if mass > 0:
                atoms[subset] = float(mass)
        total = sum(atoms.values())
        if total > self.bound * (1 + 1e-12):
            raise ValueError(f"l1 mass {total} exceeds bound {self.bound}")
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def zero(cls, bound: float, j: int) -> "DualVector":
        return cls({}, bound, j)

    @classmethod
    def vertex(cls, subset, bound: float, j: int) -> "DualVector":
        return cls({frozenset(subset): bound}, bound, j)

    @property
    def is_zero(self) -> bool:
        return not self.atoms

    @property
    def l1(self) -> float:
        return sum(self.atoms.values())

    def scaled(self, factor: float) -> "DualVector":
        return DualVector({s: m * factor for s, m in self.atoms.items()}, self.bound, self.j)


def average_duals(duals, bound: float, j: int) -> DualVector:
    """Uniform average of a sequence of duals; sparsity is preserved."""
    merged: dict = {}
    t = len(duals)
    for lam in duals:
        for subset, mass in lam.atoms.items():
            merged[subset] = merged.get(subset, 0.0) + mass / t
    return DualVector(merged, bound, j)


@dataclass(frozen=True)
class EtaSchedule:
    """Estimated minimax-sum values, one per completed round."""

    values: tuple
    loss_bound: float

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if self.loss_bound <= 0:
            raise ValueError("loss_bound must be positive")
        for r, v in enumerate(vals, start=1):
            if not 0 <= v <= r * self.loss_bound + 1e-9:
                raise ValueError(f"eta_{r}={v} outside [0, {r}*L_M]")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)

    def extended(self, value: float) -> "EtaSchedule":
        return EtaSchedule(self.values + (value,), self.loss_bound)


@dataclass(frozen=True)
class RunConfig:
    """Run parameters; per-round iteration counts are derived, not stored.

    ``loss_bound``/``grad_bound``/``diameter`` are the regression-side bounds;
    ``delta`` is the classification failure probability. ``budget`` caps the
    per-round iteration count.
    """

    ell: int
    alpha: float
    delta: float | None = None
    loss_bound: float | None = None
    grad_bound: float | None = None
    diameter: float | None = None
    seed: int = 0
    budget: int = 10_000_000

    def __post_init__(self):
        if self.ell < 1:
            raise ValueError("ell must be >= 1")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.delta is not None and not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        for name in ("loss_bound", "grad_bound", "diameter"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")

    def reg_round(self, j: int) -> tuple[int, float]:
        """Scheduled (T_j, B_j) for the regression dynamics at round j."""
        lm, g, dd, a = self.loss_bound, self.grad_bound, self.diameter, self.alpha
        if lm is None or g is None or dd is None:
            raise ValueError("regression schedule needs loss_bound, grad_bound, diameter")
        t = 4 * j**2 * (g * dd + lm) ** 2 * (2 * a + j * lm) ** 2 / a**4
        b = (a + j * lm) / a
        return math.ceil(t), b

    def clf_round(self, j: int, n: int, n_min: int, K: int) -> tuple[int, float, int, bool]:
        """Scheduled (T_j, B_j, m_j, clamped) for the classification dynamics.

        T_j is clamped to ``budget`` (m_j is then recomputed from the clamped
        count); m_j is clamped below at 1.
        """
        if self.delta is None:
            raise ValueError("classification schedule needs delta")
        a = self.alpha
        t_sched = 256 * (2 * a + j) ** 2 * n**3 / (a**4 * n_min**2)
        clamped = t_sched > self.budget
        t = min(math.ceil(t_sched), self.budget)
        b = (a + j) / a
        m = K**2 * n_min**2 * t * math.log(4 * j * K * t / self.delta) / (2 * n**3)
        return t, b, max(1, math.ceil(m)), clamped


def subsets_up_to(K: int, j: int):
    """All non-empty subsets of {0..K-1} of size at most j (test-oracle scale)."""
    for r in range(1, j + 1):
        yield from (frozenset(c) for c in combinations(range(K), r))
