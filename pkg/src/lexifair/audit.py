"""Certificates and audits: lexifairness verification against oracle values,
train/test generalization gaps, and the instability demonstration."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import EtaSchedule, GroupErrorVector, top_j_sum
from .oracle import LossMatrix, exact_lexifair_lp, relaxed_third_level

INSTABILITY_ALPHA = 0.05


@dataclass(frozen=True)
class LexifairCertificate:
    """Pass/fail record for a trained model against exact per-level optima."""

    eta: tuple
    opt: tuple | None
    slack: tuple | None
    top_sums: tuple
    group_errors: tuple
    verdict: str
    alpha: float
    ell: int
    params: dict

    def to_json(self) -> dict:
        return {
            "eta": list(self.eta),
            "opt": None if self.opt is None else list(self.opt),
            "slack": None if self.slack is None else list(self.slack),
            "top_sums": list(self.top_sums),
            "group_errors": list(self.group_errors),
            "verdict": self.verdict,
            "alpha": self.alpha,
            "ell": self.ell,
            "params": self.params,
        }


@dataclass(frozen=True)
class GeneralizationReport:
    """Train/test gap measurement for a single delivered model."""

    train_errors: tuple
    test_errors: tuple
    gaps: tuple
    beta_hat: float
    alpha_prime: float
    alpha: float
    ell: int
    flags: tuple

    def to_json(self) -> dict:
        return {
            "train_errors": list(self.train_errors),
            "test_errors": list(self.test_errors),
            "gaps": [None if math.isnan(g) else g for g in self.gaps],
            "beta_hat": self.beta_hat,
            "alpha_prime": self.alpha_prime,
            "alpha": self.alpha,
            "ell": self.ell,
            "flags": list(self.flags),
        }


def certify(
    model_errors: GroupErrorVector,
    eta_schedule: EtaSchedule,
    oracle_opts,
    alpha: float,
    ell: int,
    params: dict | None = None,
) -> LexifairCertificate:
    """Check the two level-wise conditions: the estimated values track the
    exact optima within alpha, and the model's top-r sums track the optima
    within slack + alpha.

    Without oracle values the certificate is emitted as "unverified" and only
    records the schedule-internal quantities.
    """
    if len(eta_schedule) < ell:
        raise ValueError(f"eta schedule has {len(eta_schedule)} < ell={ell} entries")
    eta = eta_schedule.values[:ell]
    tops = tuple(top_j_sum(model_errors, r) for r in range(1, ell + 1))
    params = dict(params or {})
    if oracle_opts is None:
        return LexifairCertificate(
            eta, None, None, tops, tuple(model_errors.errors), "unverified",
            alpha, ell, params,
        )
    opts = tuple(float(v) for v in oracle_opts)
    if len(opts) < ell:
        raise ValueError("need one oracle value per level")
    opts = opts[:ell]
    slack = tuple(e - o for e, o in zip(eta, opts))
    ok = all(
        s <= alpha and t <= o + s + alpha
        for s, t, o in zip(slack, tops, opts)
    )
    return LexifairCertificate(
        eta, opts, slack, tops, tuple(model_errors.errors),
        "pass" if ok else "fail", alpha, ell, params,
    )


def _group_errors_ragged(point_losses, membership) -> np.ndarray:
    """Per-group mean losses; NaN for groups with no members."""
    sizes = membership.sum(axis=0).astype(float)
    sums = membership.T @ point_losses
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(sizes > 0, sums / np.maximum(sizes, 1.0), np.nan)


def generalization_gap(
    point_losses_fn,
    train,
    test,
    ell: int,
    alpha: float,
    delta: float = 0.05,
    vc_dim: int = 3,
) -> GeneralizationReport:
    """Measure per-group train/test gaps for one model.

    ``point_losses_fn(X, y)`` evaluates the delivered model. ``train`` and
    ``test`` are GroupedDatasets sharing K and d. The sample-size adequacy
    check applies the VC-style rate with explicit constant 1.
    """
    if train.K != test.K or train.d != test.d:
        raise ValueError("train and test must share K and d")
    train_err = _group_errors_ragged(
        np.asarray(point_losses_fn(train.X, train.y), dtype=float), train.membership
    )
    test_err = _group_errors_ragged(
        np.asarray(point_losses_fn(test.X, test.y), dtype=float), test.membership
    )
    gaps = np.abs(train_err - test_err)
    flags = []
    if np.isnan(gaps).any():
        flags.append("undefined-group-gap")
    beta_hat = float(np.nanmax(gaps)) if not np.isnan(gaps).all() else 0.0
    needed = ell**2 * (vc_dim * math.log(max(test.n, 2)) + math.log(train.K / delta)) / alpha**2
    if min(train.n_min, test.n_min) < needed:
        flags.append("sample-size-shortfall")
    return GeneralizationReport(
        tuple(train_err),
        tuple(test_err),
        tuple(gaps),
        beta_hat,
        alpha + 2 * ell * beta_hat,
        alpha,
        ell,
        tuple(flags),
    )


def instability_matrix(alpha: float = INSTABILITY_ALPHA) -> LossMatrix:
    """The two-classifier, three-group instance whose exact solution collapses
    under a loosened minimax bound."""
    return LossMatrix(
        np.array(
            [
                [0.5, 0.5 + 2 * alpha],
                [0.5, 0.0],
                [0.0, 0.5],
            ]
        )
    )


def instability_demo(alpha: float = INSTABILITY_ALPHA) -> dict:
    """Why pointwise approximation of the exact values is ill-posed.

    Reports the exact per-level values (0.5, 0.5, 0), the error vector of the
    uniform mixture that a loosened minimax bound admits, and the third-level
    value the relaxation forces up from 0 to about 0.25.
    """
    M = instability_matrix(alpha)
    truth = exact_lexifair_lp(M, 3)
    uniform = M.values @ np.array([0.5, 0.5])
    return {
        "alpha": alpha,
        "exact_gamma": list(truth.gamma),
        "exact_witness": list(truth.witness),
        "uniform_mixture_errors": list(uniform),
        "relaxed_third_value": relaxed_third_level(M, alpha),
    }
