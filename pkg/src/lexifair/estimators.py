"""Scikit-learn style estimator wrappers around the lexifair trainers."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .classification import lexifair_clf
from .core import GroupedDataset, RunConfig
from .regression import ConvexLoss, ParamDomain, lexifair_reg


def _as_dataset(X, y, groups, classification: bool = False) -> GroupedDataset:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be 2-dimensional")
    if y.shape != (X.shape[0],):
        raise ValueError("y must be a length-n vector")
    if classification and not set(np.unique(y)) <= {0.0, 1.0}:
        raise ValueError("classification labels must be 0/1")
    if groups is None:
        membership = np.ones((X.shape[0], 1), dtype=bool)
        return GroupedDataset(X, y, membership)
    # boolean matrix = membership; anything else = per-point group index lists
    if isinstance(groups, np.ndarray) and groups.ndim == 2 and groups.dtype == bool:
        return GroupedDataset(X, y, groups)
    return GroupedDataset.from_arrays(X, y, [list(g) for g in groups])


class LexifairRegressor(BaseEstimator):
    """Linear model trained for lexicographic minimax fairness across groups.

    Parameters mirror the underlying dynamics: ``ell`` levels are solved in
    sequence, each to additive accuracy ``alpha``, with the parameter vector
    constrained to a Euclidean ball of the given radius.
    """

    def __init__(
        self,
        ell: int = 1,
        alpha: float = 0.1,
        loss: str = "squared",
        radius: float = 1.0,
        budget: int = 10_000_000,
        seed: int = 0,
    ):
        self.ell = ell
        self.alpha = alpha
        self.loss = loss
        self.radius = radius
        self.budget = budget
        self.seed = seed

    def fit(self, X, y, groups=None):
        dataset = _as_dataset(X, y, groups)
        domain = ParamDomain(np.zeros(dataset.d), self.radius)
        if self.loss == "squared":
            loss = ConvexLoss.squared(dataset, domain)
        elif self.loss == "logistic":
            loss = ConvexLoss.logistic(dataset, domain)
        else:
            raise ValueError(f"unknown loss {self.loss!r}")
        config = RunConfig(
            ell=self.ell,
            alpha=self.alpha,
            loss_bound=loss.loss_bound,
            grad_bound=loss.grad_bound,
            diameter=domain.diameter,
            seed=self.seed,
            budget=self.budget,
        )
        outcome = lexifair_reg(dataset, config, loss, domain)
        self.coef_ = outcome.theta
        self.eta_ = np.array(outcome.eta_schedule.values)
        self.group_errors_ = outcome.errors.errors
        self.outcome_ = outcome
        self.loss_fn_ = loss
        self.n_features_in_ = dataset.d
        return self

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features_in_:
            raise ValueError("X has the wrong shape")
        return X @ self.coef_


class LexifairClassifier(BaseEstimator):
    """Randomized stump-ensemble classifier trained for lexicographic
    minimax fairness across groups.

    ``predict_proba`` exposes the mixture probability of label 1; ``predict``
    thresholds it at 1/2.
    """

    def __init__(
        self,
        ell: int = 1,
        alpha: float = 0.1,
        delta: float = 0.05,
        budget: int = 10_000_000,
        seed: int = 0,
    ):
        self.ell = ell
        self.alpha = alpha
        self.delta = delta
        self.budget = budget
        self.seed = seed

    def fit(self, X, y, groups=None):
        dataset = _as_dataset(X, y, groups, classification=True)
        config = RunConfig(
            ell=self.ell,
            alpha=self.alpha,
            delta=self.delta,
            seed=self.seed,
            budget=self.budget,
        )
        outcome = lexifair_clf(dataset, config)
        self.model_ = outcome.model
        self.eta_ = np.array(outcome.eta_schedule.values)
        self.group_errors_ = outcome.errors.errors
        self.outcome_ = outcome
        self.classes_ = np.array([0.0, 1.0])
        self.n_features_in_ = dataset.d
        return self

    def predict_proba(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features_in_:
            raise ValueError("X has the wrong shape")
        p1 = self.model_.predict_proba(X)
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(float)
