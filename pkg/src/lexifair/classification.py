"""Lexifair training for randomized classifiers over decision stumps.

The base family is decision stumps plus the two constant classifiers: an
exact cost-sensitive minimizer exists (exhaustive threshold scan), the VC
dimension is finite, and the induced labelings are enumerable, which the
verification oracles rely on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DualVector,
    EtaSchedule,
    GroupedDataset,
    GroupErrorVector,
    RunConfig,
    group_errors,
)
from .game import LagrangianContext, auditor_best_response, learner_weights

# VC dimension used in sample-size checks: one threshold family per feature
# plus the constants.
STUMP_VC_DIM = 3


@dataclass(frozen=True, order=True)
class BaseClassifier:
    """A decision stump or a constant classifier.

    Stumps predict 1 on ``x[feature] <= threshold`` when ``polarity`` is +1
    and on the complement when it is -1. Constants ignore the input; their
    label is stored in ``polarity``. Field order defines the deterministic
    tie-break used by the cost oracle.
    """

    kind: str
    feature: int = -1
    threshold: float = 0.0
    polarity: int = 0

    def __post_init__(self):
        if self.kind == "constant":
            if self.polarity not in (0, 1):
                raise ValueError("constant label must be 0 or 1")
        elif self.kind == "stump":
            if self.feature < 0 or self.polarity not in (-1, 1):
                raise ValueError("stump needs a feature index and polarity +/-1")
        else:
            raise ValueError(f"unknown classifier kind {self.kind!r}")

    @classmethod
    def constant(cls, label: int) -> "BaseClassifier":
        return cls("constant", polarity=label)

    @classmethod
    def stump(cls, feature: int, threshold: float, polarity: int) -> "BaseClassifier":
        return cls("stump", feature=feature, threshold=threshold, polarity=polarity)

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.kind == "constant":
            return np.full(X.shape[0], self.polarity, dtype=int)
        below = X[:, self.feature] <= self.threshold
        return (below if self.polarity == 1 else ~below).astype(int)


@dataclass(frozen=True)
class RandomizedClassifier:
    """Finite-support distribution over base classifiers."""

    support: tuple
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(self.support) == 0 or w.shape != (len(self.support),):
            raise ValueError("support and weights must be non-empty and aligned")
        if (w < 0).any() or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be non-negative and sum to 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "support", tuple(self.support))

    @classmethod
    def point_mass(cls, h: BaseClassifier) -> "RandomizedClassifier":
        return cls((h,), np.ones(1))

    @classmethod
    def from_draws(cls, draws) -> "RandomizedClassifier":
        """Empirical distribution of a sample, duplicates merged by weight."""
        counts: dict = {}
        for h in draws:
            counts[h] = counts.get(h, 0) + 1
        support = sorted(counts)
        total = len(draws)
        weights = np.array([counts[h] / total for h in support])
        weights /= weights.sum()
        return cls(tuple(support), weights)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """P(prediction = 1) per point."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        proba = np.zeros(X.shape[0])
        for h, w in zip(self.support, self.weights):
            proba += w * h.predict(X)
        return proba

    def point_losses(self, X: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Expected zero-one loss per point (linear in the weights)."""
        proba = self.predict_proba(X)
        return np.abs(proba - np.asarray(y, dtype=float))


@dataclass(frozen=True)
class CostVector:
    """Per-point signed costs plus the coefficient of eta_j."""

    c: np.ndarray
    c_coeff: float


def candidate_thresholds(values: np.ndarray) -> np.ndarray:
    """Canonical stump thresholds for one feature: one below all points, one
    between each pair of distinct consecutive values, one above all points."""
    sorted_vals = np.unique(values)
    mids = (sorted_vals[:-1] + sorted_vals[1:]) / 2.0
    return np.concatenate(([sorted_vals[0] - 1.0], mids, [sorted_vals[-1] + 1.0]))


def _candidate_objectives(C: np.ndarray, dataset: GroupedDataset):
    """Objectives of every family member against a batch of cost vectors.

    ``C`` is (m, n); returns the (m, n_cand) objective matrix together with a
    builder mapping a column index to its classifier. Columns follow the
    canonical (kind, feature, threshold, polarity) order. The batch shares one
    argsort per feature, and classifiers are only materialized on demand,
    which is what makes the FTPL inner loop affordable.
    """
    m = C.shape[0]
    total = C.sum(axis=1)
    blocks = [np.zeros((m, 1)), total[:, None]]
    feature_thresholds = []
    for f in range(dataset.d):
        x = dataset.X[:, f]
        order = np.argsort(x, kind="stable")
        thresholds = candidate_thresholds(x)
        boundaries = np.searchsorted(x[order], thresholds, side="right")
        prefix = np.concatenate(
            [np.zeros((m, 1)), np.cumsum(C[:, order], axis=1)], axis=1
        )
        below = prefix[:, boundaries]
        block = np.empty((m, 2 * thresholds.size))
        block[:, 0::2] = total[:, None] - below  # polarity -1
        block[:, 1::2] = below  # polarity +1
        blocks.append(block)
        feature_thresholds.append(thresholds)
    starts = 2 + 2 * np.cumsum([0] + [t.size for t in feature_thresholds[:-1]])

    def builder(i: int) -> BaseClassifier:
        if i < 2:
            return BaseClassifier.constant(i)
        f = int(np.searchsorted(starts, i, side="right")) - 1
        ti, pol_idx = divmod(i - starts[f], 2)
        thr = float(feature_thresholds[f][ti])
        return BaseClassifier.stump(f, thr, -1 if pol_idx == 0 else 1)

    return np.concatenate(blocks, axis=1), builder


def _batched_oracle(C: np.ndarray, dataset: GroupedDataset) -> list:
    """Exact cost minimizer per batch row; ties within 1e-15 of the minimum go
    to the lexicographically smallest classifier."""
    objs, builder = _candidate_objectives(C, dataset)
    picks = (objs <= objs.min(axis=1, keepdims=True) + 1e-15).argmax(axis=1)
    return [builder(int(i)) for i in picks]


def csc_oracle(costs: np.ndarray, dataset: GroupedDataset) -> BaseClassifier:
    """Exact minimizer of sum_i costs[i] * h(x_i) over stumps + constants.

    Scans every feature, threshold position, and polarity; ties broken by the
    classifiers' (kind, feature, threshold, polarity) order.
    """
    costs = np.asarray(costs, dtype=float)
    if costs.shape != (dataset.n,) or not np.isfinite(costs).all():
        raise ValueError("costs must be a finite length-n vector")
    return _batched_oracle(costs[None, :], dataset)[0]


def cost_vector(lam: DualVector, dataset: GroupedDataset, j: int) -> CostVector:
    """Reduce the Learner's weighted problem to per-point signed costs."""
    weights = learner_weights(lam, j, dataset.K)
    per_group = weights.w / dataset.group_sizes
    c = (1.0 - 2.0 * dataset.y) * (dataset.membership @ per_group)
    return CostVector(c, weights.c)


def _perturbed_oracle(
    base_costs: np.ndarray, eta: float, dataset: GroupedDataset, rng: np.random.Generator
) -> BaseClassifier:
    xi = rng.random(dataset.n)
    return csc_oracle(base_costs + xi / eta, dataset)


def ftpl_sample(
    cumulative_dual: DualVector,
    eta: float,
    m: int,
    dataset: GroupedDataset,
    rng: np.random.Generator,
) -> RandomizedClassifier:
    """Empirical FTPL distribution: m perturbed-cost oracle calls, merged."""
    if m < 1 or eta <= 0:
        raise ValueError("need m >= 1 and eta > 0")
    base = cost_vector(cumulative_dual, dataset, cumulative_dual.j).c
    xi = rng.random((m, dataset.n))
    draws = _batched_oracle(base[None, :] + xi / eta, dataset)
    return RandomizedClassifier.from_draws(draws)


def eta_play(c_coeff: float, eta_prime: float, j: int) -> tuple[int, float]:
    """The Learner's eta distribution: scale j and Bernoulli parameter q."""
    if eta_prime <= 0:
        raise ValueError("eta_prime must be positive")
    if c_coeff > 0:
        return j, 0.0
    return j, min(1.0, -eta_prime * c_coeff)


@dataclass
class ClfRoundDiagnostics:
    j: int
    T: int
    B: float
    m: int
    clamped: bool
    eta_hat: float
    zero_dual_rounds: int


@dataclass
class ClassificationOutcome:
    model: RandomizedClassifier
    eta_schedule: EtaSchedule
    rounds: list[ClfRoundDiagnostics] = field(default_factory=list)
    errors: GroupErrorVector | None = None


def _spawned_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng([seed, *key])


def clf_nr(
    T: int,
    B: float,
    m: int,
    ctx: LagrangianContext,
    dataset: GroupedDataset,
    seed: int,
) -> tuple[RandomizedClassifier, float, list]:
    """FTPL Learner vs best-responding Auditor for one level.

    The Auditor responds to the pair (group errors of the empirical play,
    expected eta play). Afterwards the output model is drawn from the average
    FTPL distribution: sample a round uniformly, then one perturbed oracle
    call against that round's cumulative dual.
    """
    j = ctx.j
    n, n_min = dataset.n, dataset.n_min
    rate = (n_min / B) * math.sqrt(1.0 / (n * T))
    rate_eta = math.sqrt(1.0 / T) / (1.0 + B)

    p_hat = RandomizedClassifier.point_mass(BaseClassifier.constant(0))
    eta_expect = 0.0  # E[D^1], point mass at 0
    cum_costs = np.zeros(n)
    cum_coeff = 0.0
    cost_history = np.empty((T, n))
    history: list[tuple[np.ndarray, float, DualVector]] = []
    eta_sum = 0.0

    for t in range(1, T + 1):
        errors = group_errors(p_hat.point_losses(dataset.X, dataset.y), dataset)
        lam = auditor_best_response(errors, eta_expect, ctx)
        history.append((errors.errors, eta_expect, lam))
        eta_sum += eta_expect

        cv = cost_vector(lam, dataset, j)
        cum_costs += cv.c
        cum_coeff += cv.c_coeff - 1.0  # accumulate the dual part only
        cost_history[t - 1] = cum_costs

        # row s of the round's perturbation matrix is the stream for sample s;
        # any execution schedule regenerates the identical matrix
        xi = _spawned_rng(seed, j, t).random((m, n))
        p_hat = RandomizedClassifier.from_draws(
            _batched_oracle(cum_costs[None, :] + xi / rate, dataset)
        )
        _, q = eta_play(1.0 + cum_coeff, rate_eta, j)
        eta_expect = j * q

    rng = _spawned_rng(seed, j, T + 1)
    rounds_drawn = rng.integers(T, size=m)
    xi = rng.random((m, n))
    rows = cost_history[rounds_drawn] + xi / rate
    model = RandomizedClassifier.from_draws(_batched_oracle(rows, dataset))
    return model, eta_sum / T, history


def lexifair_clf(dataset: GroupedDataset, config: RunConfig) -> ClassificationOutcome:
    """Level-by-level FTPL dynamics over the stump family (zero-one loss)."""
    if config.delta is None:
        raise ValueError("classification needs a delta in (0, 1)")
    if not set(np.unique(dataset.y)) <= {0.0, 1.0}:
        raise ValueError("classification labels must be binary {0, 1}")
    schedule = EtaSchedule((), 1.0)
    outcome = ClassificationOutcome(
        model=RandomizedClassifier.point_mass(BaseClassifier.constant(0)),
        eta_schedule=schedule,
    )
    for j in range(1, config.ell + 1):
        T, B, m, clamped = config.clf_round(j, dataset.n, dataset.n_min, dataset.K)
        ctx = LagrangianContext(j, schedule, B, 1.0)
        model, eta_hat, history = clf_nr(T, B, m, ctx, dataset, config.seed)
        schedule = schedule.extended(min(eta_hat, float(j)))
        outcome.model = model
        zero_dual = sum(1 for _, _, lam in history if lam.is_zero)
        outcome.rounds.append(
            ClfRoundDiagnostics(j, T, B, m, clamped, eta_hat, zero_dual)
        )
    outcome.eta_schedule = schedule
    outcome.errors = group_errors(
        outcome.model.point_losses(dataset.X, dataset.y), dataset
    )
    return outcome


def induced_labelings(dataset: GroupedDataset) -> tuple[np.ndarray, list[BaseClassifier]]:
    """Every distinct labeling of the sample induced by stumps + constants.

    Returns the (n, |H(S)|) prediction matrix and one representative
    classifier per labeling; the count respects the Sauer-style bound
    2(d(n+1)+1).
    """
    reps: dict[bytes, BaseClassifier] = {}
    columns: list[np.ndarray] = []
    for h in iterate_family(dataset):
        pred = h.predict(dataset.X)
        key = pred.tobytes()
        if key not in reps:
            reps[key] = h
            columns.append(pred)
    return np.array(columns).T, list(reps.values())


def iterate_family(dataset: GroupedDataset):
    """Canonical members of the stump + constant family, in tie-break order."""
    yield BaseClassifier.constant(0)
    yield BaseClassifier.constant(1)
    for f in range(dataset.d):
        for thr in candidate_thresholds(dataset.X[:, f]):
            for polarity in (-1, 1):
                yield BaseClassifier.stump(f, float(thr), polarity)
