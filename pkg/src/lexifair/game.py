"""The per-round Lagrangian zero-sum game between Learner and Auditor.

The Auditor's strategy space is the l1-ball of weight ``B`` over all group
subsets of size at most ``j``; its best response is always a vertex (all mass
on the most violated sorted-prefix constraint), which is what keeps the
exponentially large constraint family tractable.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DualVector, EtaSchedule, GroupErrorVector, top_j_sum


@dataclass(frozen=True)
class LagrangianContext:
    """Fixed data of the round-j game: previous estimates, B, and L_M."""

    j: int
    history: EtaSchedule
    bound: float
    loss_bound: float

    def __post_init__(self):
        if len(self.history) != self.j - 1:
            raise ValueError(f"round {self.j} needs {self.j - 1} previous estimates")
        if self.bound <= 0:
            raise ValueError("bound must be positive")

    def eta_for(self, r: int, eta_j: float) -> float:
        """eta value for a rank-r constraint: history below j, the play at j."""
        return eta_j if r == self.j else self.history.values[r - 1]


@dataclass(frozen=True)
class LearnerWeights:
    """Per-group weights w_r and the coefficient c of eta_j, both linear in the dual."""

    w: np.ndarray
    c: float


def learner_weights(lam: DualVector, j: int, K: int) -> LearnerWeights:
    """Decomposition weights: w_r sums the mass of atoms containing group r;
    c is 1 minus the mass sitting on cardinality-j atoms.
    """
    w = np.zeros(K)
    c = 1.0
    for subset, mass in lam.atoms.items():
        for r in subset:
            w[r] += mass
        if len(subset) == j:
            c -= mass
    return LearnerWeights(w, c)


def lagrangian_value(
    errors: GroupErrorVector, eta_j: float, lam: DualVector, ctx: LagrangianContext
) -> float:
    """eta_j plus the mass-weighted constraint violations of the dual's atoms."""
    value = eta_j
    for subset, mass in lam.atoms.items():
        subset_sum = float(errors.errors[list(subset)].sum())
        value += mass * (subset_sum - ctx.eta_for(len(subset), eta_j))
    return value


def auditor_best_response(
    errors: GroupErrorVector, eta_j: float, ctx: LagrangianContext
) -> DualVector:
    """Exact vertex best response to the Learner's play.

    Returns the zero dual when no sorted-prefix constraint is violated;
    otherwise puts mass B on the top-r* prefix, where r* maximizes the
    violation (smallest r* on ties).
    """
    j = ctx.j
    best_r = None
    best_violation = 0.0
    for r in range(1, j + 1):
        violation = top_j_sum(errors, r) - ctx.eta_for(r, eta_j)
        if violation > 0 and (best_r is None or violation > best_violation):
            best_r = r
            best_violation = violation
    if best_r is None:
        return DualVector.zero(ctx.bound, j)
    subset = frozenset(int(k) for k in errors.sorted_view[:best_r])
    return DualVector.vertex(subset, ctx.bound, j)
