import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lexifair.core import (
    DualVector,
    EtaSchedule,
    GroupErrorVector,
    subsets_up_to,
)
from lexifair.game import (
    LagrangianContext,
    auditor_best_response,
    lagrangian_value,
    learner_weights,
)


def make_ctx(j, history, bound=4.0, loss_bound=1.0):
    return LagrangianContext(j, EtaSchedule(tuple(history), loss_bound), bound, loss_bound)


def brute_force_best_response(errors, eta_j, ctx):
    """Independent maximizer: evaluate the Lagrangian at the zero dual and at
    every vertex (mass B on a single subset of size <= j)."""
    best_lam = DualVector.zero(ctx.bound, ctx.j)
    best_val = lagrangian_value(errors, eta_j, best_lam, ctx)
    for subset in subsets_up_to(errors.K, ctx.j):
        lam = DualVector.vertex(subset, ctx.bound, ctx.j)
        val = lagrangian_value(errors, eta_j, lam, ctx)
        if val > best_val + 1e-12:
            best_lam, best_val = lam, val
    return best_lam, best_val


errors_strategy = st.lists(
    st.floats(min_value=0, max_value=1, allow_nan=False), min_size=2, max_size=6
).map(lambda v: GroupErrorVector(np.array(v)))


class TestLearnerWeights:
    def test_single_atom(self):
        lam = DualVector.vertex({0, 2}, bound=3.0, j=2)
        w = learner_weights(lam, j=2, K=4)
        assert list(w.w) == [3.0, 0.0, 3.0, 0.0]
        assert w.c == pytest.approx(1.0 - 3.0)

    def test_lower_cardinality_atom_keeps_c(self):
        lam = DualVector.vertex({1}, bound=3.0, j=2)
        w = learner_weights(lam, j=2, K=3)
        assert list(w.w) == [0.0, 3.0, 0.0]
        assert w.c == 1.0  # only cardinality-j atoms reduce c

    def test_zero_dual(self):
        w = learner_weights(DualVector.zero(1.0, 2), j=2, K=3)
        assert not w.w.any() and w.c == 1.0


class TestLagrangianDecomposition:
    @given(
        errors_strategy,
        st.floats(min_value=0, max_value=2, allow_nan=False),
        st.integers(min_value=0, max_value=10),
    )
    @settings(max_examples=100)
    def test_value_equals_weight_decomposition(self, errors, eta_j, pick):
        """The Lagrangian equals sum_r w_r e_r + c eta_j plus a term constant
        in the play (the history etas weighted by their atom masses)."""
        j = 2 if errors.K >= 2 else 1
        history = [0.3] * (j - 1)
        ctx = make_ctx(j, history)
        subsets = list(subsets_up_to(errors.K, j))
        lam = DualVector.vertex(subsets[pick % len(subsets)], ctx.bound, j)

        direct = lagrangian_value(errors, eta_j, lam, ctx)
        weights = learner_weights(lam, j, errors.K)
        const = -sum(
            mass * ctx.history.values[len(s) - 1]
            for s, mass in lam.atoms.items()
            if len(s) < j
        )
        decomposed = float(weights.w @ errors.errors) + weights.c * eta_j + const
        assert direct == pytest.approx(decomposed, abs=1e-12)


class TestAuditorBestResponse:
    def test_zero_when_no_violation(self):
        errors = GroupErrorVector(np.array([0.2, 0.1]))
        ctx = make_ctx(2, [0.3])
        assert auditor_best_response(errors, 0.5, ctx).is_zero

    def test_single_violation_level(self):
        errors = GroupErrorVector(np.array([0.6, 0.1]))
        ctx = make_ctx(2, [0.3])
        lam = auditor_best_response(errors, 0.9, ctx)
        assert lam.atoms == {frozenset({0}): ctx.bound}

    def test_smallest_prefix_wins_ties(self):
        # top-1 and top-2 violations are both exactly 0.25
        errors = GroupErrorVector(np.array([0.5, 0.25]))
        ctx = make_ctx(2, [0.25])
        lam = auditor_best_response(errors, 0.5, ctx)
        assert lam.atoms == {frozenset({0}): ctx.bound}

    def test_prefix_uses_sorted_tie_break(self):
        errors = GroupErrorVector(np.array([0.4, 0.4, 0.4]))
        ctx = make_ctx(2, [0.1])
        lam = auditor_best_response(errors, 0.0, ctx)
        # groups 0 and 1 form the top-2 prefix under the ascending-index tie-break
        assert lam.atoms == {frozenset({0, 1}): ctx.bound}

    @given(
        errors_strategy,
        st.floats(min_value=0, max_value=2, allow_nan=False),
        st.floats(min_value=0, max_value=1, allow_nan=False),
    )
    @settings(max_examples=150)
    def test_matches_vertex_enumeration(self, errors, eta_j, eta_prev):
        j = min(3, errors.K)
        ctx = make_ctx(j, [eta_prev] * (j - 1), loss_bound=2.0)
        lam = auditor_best_response(errors, eta_j, ctx)
        _, best_val = brute_force_best_response(errors, eta_j, ctx)
        achieved = lagrangian_value(errors, eta_j, lam, ctx)
        assert achieved == pytest.approx(best_val, abs=1e-9)


class TestLagrangianContext:
    def test_history_length_check(self):
        with pytest.raises(ValueError, match="previous estimates"):
            make_ctx(3, [0.1])

    def test_eta_for(self):
        ctx = make_ctx(3, [0.1, 0.2])
        assert ctx.eta_for(1, 9.0) == 0.1
        assert ctx.eta_for(2, 9.0) == 0.2
        assert ctx.eta_for(3, 9.0) == 9.0
