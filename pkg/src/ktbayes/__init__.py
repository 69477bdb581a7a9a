"""Interpretable knowledge tracing.

Per-skill Bayesian knowledge tracing over interaction logs, five
human-readable evidence features per attempt, and a tree-augmented naive
Bayes classifier for next-attempt correctness, with student-level
cross-validation tooling and a CLI.
"""

from .bkt import (
    BktParams,
    DEFAULT_PARAMS,
    FitConfig,
    MasteryTrace,
    apply_learning,
    fit_all_skills,
    fit_bkt_em,
    log_likelihood,
    posterior_given_correct,
    posterior_given_incorrect,
    predict_correct,
    trace_mastery,
)
from .estimators import KnowledgeTracingModel, TanClassifier, as_records
from .evaluate import EvalReport, cross_validate
from .features import (
    DifficultyTable,
    EvidenceRow,
    ProfileState,
    build_evidence_rows,
    compute_difficulty_table,
    df_profile,
    discretize,
    sr_profile,
)
from .ingest import (
    CsvSchema,
    FoldAssignment,
    InteractionRecord,
    RawRow,
    clean,
    parse_interactions,
    split_folds,
)
from .metrics import ScoredPrediction, auc, auc_scores, rmse, rmse_scores
from .tan import (
    TanModel,
    TanStructure,
    fit_cpts,
    fixed_structure,
    joint_probability,
    learn_structure_cmi,
    predict,
)

__version__ = "0.1.0"

__all__ = [
    "BktParams",
    "CsvSchema",
    "DEFAULT_PARAMS",
    "DifficultyTable",
    "EvalReport",
    "EvidenceRow",
    "FitConfig",
    "FoldAssignment",
    "InteractionRecord",
    "KnowledgeTracingModel",
    "MasteryTrace",
    "ProfileState",
    "RawRow",
    "ScoredPrediction",
    "TanClassifier",
    "TanModel",
    "TanStructure",
    "apply_learning",
    "as_records",
    "auc",
    "auc_scores",
    "build_evidence_rows",
    "clean",
    "compute_difficulty_table",
    "cross_validate",
    "df_profile",
    "discretize",
    "fit_all_skills",
    "fit_bkt_em",
    "fit_cpts",
    "fixed_structure",
    "joint_probability",
    "learn_structure_cmi",
    "log_likelihood",
    "parse_interactions",
    "posterior_given_correct",
    "posterior_given_incorrect",
    "predict",
    "predict_correct",
    "rmse",
    "rmse_scores",
    "split_folds",
    "sr_profile",
    "trace_mastery",
]
