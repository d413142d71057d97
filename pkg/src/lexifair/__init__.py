"""Lexicographically minimax-fair learning over overlapping groups.

Training solves a sequence of two-player zero-sum games, one per fairness
level, and ships with exact LP-based verification oracles and
generalization audits.
"""
from .audit import (
    GeneralizationReport,
    LexifairCertificate,
    certify,
    generalization_gap,
    instability_demo,
)
from .classification import (
    BaseClassifier,
    ClassificationOutcome,
    RandomizedClassifier,
    csc_oracle,
    lexifair_clf,
)
from .core import (
    BudgetExceeded,
    DatasetError,
    DualVector,
    EtaSchedule,
    GroupedDataset,
    GroupErrorVector,
    RunConfig,
    group_errors,
    top_j_sum,
)
from .estimators import LexifairClassifier, LexifairRegressor
from .game import LagrangianContext, auditor_best_response, lagrangian_value
from .oracle import (
    LexifairGroundTruth,
    LossMatrix,
    definition1_gamma,
    exact_lexifair_lp,
    minimax_value,
)
from .regression import ConvexLoss, ParamDomain, RegressionOutcome, lexifair_reg
from .synth import gen_synth

__version__ = "0.1.0"

__all__ = [
    "BaseClassifier",
    "BudgetExceeded",
    "ClassificationOutcome",
    "ConvexLoss",
    "DatasetError",
    "DualVector",
    "EtaSchedule",
    "GeneralizationReport",
    "GroupedDataset",
    "GroupErrorVector",
    "LagrangianContext",
    "LexifairCertificate",
    "LexifairClassifier",
    "LexifairGroundTruth",
    "LexifairRegressor",
    "LossMatrix",
    "ParamDomain",
    "RandomizedClassifier",
    "RegressionOutcome",
    "RunConfig",
    "auditor_best_response",
    "certify",
    "csc_oracle",
    "definition1_gamma",
    "exact_lexifair_lp",
    "gen_synth",
    "generalization_gap",
    "group_errors",
    "instability_demo",
    "lagrangian_value",
    "lexifair_clf",
    "lexifair_reg",
    "minimax_value",
    "top_j_sum",
]
