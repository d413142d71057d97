"""Lexifair training for parametric convex-loss models.

The outer loop runs one Lagrangian game per level; inside each game the
Learner plays Online Projected Gradient Descent on (theta, eta_j) while the
Auditor plays exact vertex best responses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    BudgetExceeded,
    EtaSchedule,
    GroupedDataset,
    GroupErrorVector,
    RunConfig,
    group_errors,
)
from .game import LagrangianContext, auditor_best_response, learner_weights


class BoundViolation(RuntimeError):
    """A certified loss or gradient bound was exceeded at runtime."""


@dataclass(frozen=True)
class ParamDomain:
    """Euclidean ball: closed-form, idempotent projection."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        c.setflags(write=False)
        object.__setattr__(self, "center", c)

    @property
    def d(self) -> int:
        return self.center.size

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def project(self, theta: np.ndarray) -> np.ndarray:
        delta = theta - self.center
        norm = float(np.linalg.norm(delta))
        if norm <= self.radius:
            return theta
        return self.center + delta * (self.radius / norm)


@dataclass(frozen=True)
class ConvexLoss:
    """Per-point loss/gradient evaluators with certified bounds.

    ``loss_bound`` (max loss over the domain and data) and ``grad_bound``
    (max gradient norm) are computed a priori from data maxima; runtime
    monitors abort the run if either is ever exceeded.
    """

    kind: str
    loss_bound: float
    grad_bound: float

    def point_losses(self, theta: np.ndarray, X: np.ndarray, y: np.ndarray) -> np.ndarray:
        u = X @ theta
        if self.kind == "squared":
            out = (u - y) ** 2
        elif self.kind == "logistic":
            out = np.logaddexp(0.0, u) - y * u
        else:
            raise ValueError(f"unknown loss kind {self.kind!r}")
        self._check("loss", out.max(initial=0.0) <= self.loss_bound + 1e-9, out)
        return out

    def mean_gradient(self, theta: np.ndarray, X: np.ndarray, y: np.ndarray) -> np.ndarray:
        u = X @ theta
        if self.kind == "squared":
            per_point = 2.0 * (u - y)
        elif self.kind == "logistic":
            per_point = 1.0 / (1.0 + np.exp(-u)) - y
        else:
            raise ValueError(f"unknown loss kind {self.kind!r}")
        grad = X.T @ per_point / X.shape[0]
        self._check("gradient", np.isfinite(grad).all(), grad)
        return grad

    def _check(self, what: str, ok: bool, value) -> None:
        if not ok or not np.all(np.isfinite(value)):
            raise BoundViolation(f"{self.kind} {what} exceeded its certified bound")

    @classmethod
    def squared(cls, dataset: GroupedDataset, domain: ParamDomain) -> "ConvexLoss":
        x_max = float(np.linalg.norm(dataset.X, axis=1).max())
        y_max = float(np.abs(dataset.y).max())
        reach = domain.radius + float(np.linalg.norm(domain.center))
        margin = reach * x_max + y_max
        return cls("squared", loss_bound=margin**2, grad_bound=2.0 * x_max * margin)

    @classmethod
    def logistic(cls, dataset: GroupedDataset, domain: ParamDomain) -> "ConvexLoss":
        x_max = float(np.linalg.norm(dataset.X, axis=1).max())
        reach = domain.radius + float(np.linalg.norm(domain.center))
        return cls("logistic", loss_bound=reach * x_max + math.log(2.0), grad_bound=x_max)


def loss_and_gradient(
    theta: np.ndarray, dataset: GroupedDataset, k: int, loss: ConvexLoss
) -> tuple[float, np.ndarray]:
    """Group-k mean loss and mean gradient at theta."""
    idx = dataset.group_indices(k)
    Xk, yk = dataset.X[idx], dataset.y[idx]
    value = float(loss.point_losses(theta, Xk, yk).mean())
    return value, loss.mean_gradient(theta, Xk, yk)


def ogd_step(
    theta: np.ndarray, grad: np.ndarray, step: float, domain: ParamDomain
) -> np.ndarray:
    """One projected gradient step onto the ball."""
    if step <= 0:
        raise ValueError("step must be positive")
    return domain.project(theta - step * grad)


@dataclass
class RoundDiagnostics:
    j: int
    T: int
    B: float
    nu: float
    eta_hat: float
    zero_dual_rounds: int


@dataclass
class RegressionOutcome:
    """Final parameters, the eta schedule, and per-round diagnostics."""

    theta: np.ndarray
    eta_schedule: EtaSchedule
    rounds: list[RoundDiagnostics] = field(default_factory=list)
    errors: GroupErrorVector | None = None


def reg_nr(
    T: int,
    B: float,
    ctx: LagrangianContext,
    dataset: GroupedDataset,
    loss: ConvexLoss,
    domain: ParamDomain,
) -> tuple[np.ndarray, float, RoundDiagnostics]:
    """No-regret dynamics for one level: OPGD Learner vs best-responding Auditor.

    Returns the average play (theta_hat, eta_hat_j). The Learner starts at the
    domain center with eta_j at the midpoint of its range.
    """
    j, lm = ctx.j, loss.loss_bound
    rate_theta = domain.diameter / (j * B * loss.grad_bound * math.sqrt(T))
    rate_eta = j * lm / ((1 + B) * math.sqrt(T))
    theta = domain.center.copy()
    eta_j = j * lm / 2.0
    theta_sum = np.zeros_like(theta)
    eta_sum = 0.0
    zero_dual = 0

    # per-group design matrices, fixed order for reproducible accumulation
    group_idx = [dataset.group_indices(k) for k in range(dataset.K)]
    sizes = dataset.group_sizes

    for _ in range(T):
        point_losses = loss.point_losses(theta, dataset.X, dataset.y)
        errors = GroupErrorVector((dataset.membership.T @ point_losses) / sizes)
        lam = auditor_best_response(errors, eta_j, ctx)
        weights = learner_weights(lam, j, dataset.K)

        theta_sum += theta
        eta_sum += eta_j

        grad_theta = np.zeros(domain.d)
        if lam.is_zero:
            zero_dual += 1
        else:
            for r in np.flatnonzero(weights.w):
                idx = group_idx[r]
                grad_theta += weights.w[r] * loss.mean_gradient(
                    theta, dataset.X[idx], dataset.y[idx]
                )
        theta = ogd_step(theta, grad_theta, rate_theta, domain)
        eta_j = float(np.clip(eta_j - rate_eta * weights.c, 0.0, j * lm))

    theta_hat = theta_sum / T
    eta_hat = eta_sum / T
    nu = j * (loss.grad_bound * domain.diameter + lm) * (B + 1) / math.sqrt(T)
    return theta_hat, eta_hat, RoundDiagnostics(j, T, B, nu, eta_hat, zero_dual)


def lexifair_reg(
    dataset: GroupedDataset,
    config: RunConfig,
    loss: ConvexLoss,
    domain: ParamDomain,
) -> RegressionOutcome:
    """Run the level-by-level dynamics and return the final average model.

    Aborts with the computed T_j if a round's schedule exceeds the budget, so
    the caller can raise alpha.
    """
    cfg = RunConfig(
        ell=config.ell,
        alpha=config.alpha,
        delta=config.delta,
        loss_bound=loss.loss_bound,
        grad_bound=loss.grad_bound,
        diameter=domain.diameter,
        seed=config.seed,
        budget=config.budget,
    )
    schedule = EtaSchedule((), loss.loss_bound)
    outcome = RegressionOutcome(theta=domain.center.copy(), eta_schedule=schedule)
    for j in range(1, cfg.ell + 1):
        T, B = cfg.reg_round(j)
        if T > cfg.budget:
            raise BudgetExceeded(j, T, cfg.budget)
        ctx = LagrangianContext(j, schedule, B, loss.loss_bound)
        theta_hat, eta_hat, diag = reg_nr(T, B, ctx, dataset, loss, domain)
        schedule = schedule.extended(min(eta_hat, j * loss.loss_bound))
        outcome.theta = theta_hat
        outcome.rounds.append(diag)
    outcome.eta_schedule = schedule
    outcome.errors = group_errors(
        loss.point_losses(outcome.theta, dataset.X, dataset.y), dataset
    )
    return outcome
