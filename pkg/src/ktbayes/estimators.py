"""Scikit-learn style estimators wrapping the tracing pipeline.

Both estimators follow the usual conventions (constructor stores
hyperparameters untouched, ``fit`` returns self, fitted state lives in
trailing-underscore attributes), so they work with ``get_params``,
``clone``, and the rest of the sklearn ecosystem. Interaction data is
accepted either as a sequence of :class:`InteractionRecord` or as a
DataFrame-like object with the matching columns.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .bkt import FitConfig, fit_all_skills
from .features import (
    EvidenceRow,
    build_evidence_rows,
    compute_difficulty_table,
)
from .ingest import InteractionRecord
from .metrics import ScoredPrediction
from .tan import (
    factor_values,
    fit_cpts,
    fixed_structure,
    joint_probability,
    learn_structure_cmi,
    predict,
)

_RECORD_COLUMNS = ("student", "problem", "skill", "outcome")


def as_records(data) -> list[InteractionRecord]:
    """Coerce a record list or DataFrame-like into InteractionRecords.

    A DataFrame needs columns student, problem, skill, outcome; seq_index is
    used when present and otherwise assigned per student in row order.
    """
    if hasattr(data, "columns") and hasattr(data, "itertuples"):
        missing = [c for c in _RECORD_COLUMNS if c not in data.columns]
        if missing:
            raise ValueError(f"missing column(s): {', '.join(missing)}")
        has_seq = "seq_index" in data.columns
        counters: dict[str, int] = {}
        records = []
        for row in data.itertuples(index=False):
            student = str(row.student)
            if has_seq:
                seq = int(row.seq_index)
            else:
                seq = counters.get(student, 0) + 1
                counters[student] = seq
            records.append(
                InteractionRecord(
                    student=student,
                    problem=str(row.problem),
                    skill=str(row.skill),
                    outcome=int(row.outcome),
                    seq_index=seq,
                )
            )
        return records
    records = list(data)
    for r in records:
        if not isinstance(r, InteractionRecord):
            raise TypeError(f"expected InteractionRecord, got {type(r).__name__}")
    return records


def _as_evidence_rows(X, y=None) -> list[EvidenceRow]:
    if hasattr(X, "columns") and hasattr(X, "itertuples"):
        labels = list(y) if y is not None else list(X["label"])
        return [
            EvidenceRow(
                skill=str(row.skill),
                mastery_bin=int(row.mastery_bin),
                sr_bin=int(row.sr_bin),
                df_bin=int(row.df_bin),
                difficulty=int(row.difficulty),
                label=int(label),
            )
            for row, label in zip(X.itertuples(index=False), labels)
        ]
    rows = list(X)
    if y is None:
        return rows
    return [
        EvidenceRow(
            skill=r.skill,
            mastery_bin=r.mastery_bin,
            sr_bin=r.sr_bin,
            df_bin=r.df_bin,
            difficulty=r.difficulty,
            label=int(label),
        )
        for r, label in zip(rows, y)
    ]


class TanClassifier(BaseEstimator, ClassifierMixin):
    """Tree-augmented naive Bayes over discretized evidence rows.

    Parameters
    ----------
    alpha : Laplace smoothing strength for every probability table.
    bins : number of equal-width bins used for the mastery/profile features.
    learn_structure : learn the feature tree from conditional mutual
        information instead of using the fixed chain.
    """

    def __init__(self, alpha=1.0, bins=10, learn_structure=False):
        self.alpha = alpha
        self.bins = bins
        self.learn_structure = learn_structure

    def fit(self, X, y=None):
        rows = _as_evidence_rows(X, y)
        structure = (
            learn_structure_cmi(rows, alpha=self.alpha, bins=self.bins)
            if self.learn_structure
            else fixed_structure()
        )
        self.model_ = fit_cpts(rows, structure=structure, alpha=self.alpha, bins=self.bins)
        self.classes_ = np.array([0, 1])
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("call fit before predicting")

    def predict_proba(self, X):
        self._check_fitted()
        rows = _as_evidence_rows(X)
        p1 = np.array([predict(self.model_, row) for row in rows])
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(int)


class KnowledgeTracingModel(BaseEstimator):
    """End-to-end next-attempt correctness model over interaction logs.

    ``fit`` estimates per-skill tracing parameters, the problem difficulty
    table, and the TAN classifier from cleaned interaction records.
    ``predict_proba`` replays each student's history in sequence order,
    scoring every interaction from state built strictly before its outcome
    is revealed; rows keep the order they were passed in.
    """

    def __init__(
        self,
        bins=10,
        alpha=1.0,
        restarts=5,
        max_iters=200,
        tol=1e-4,
        seed=0,
        guess_cap=0.3,
        slip_cap=0.3,
        min_skill_attempts=5,
        min_difficulty_attempts=4,
        default_difficulty=5,
        learn_structure=False,
    ):
        self.bins = bins
        self.alpha = alpha
        self.restarts = restarts
        self.max_iters = max_iters
        self.tol = tol
        self.seed = seed
        self.guess_cap = guess_cap
        self.slip_cap = slip_cap
        self.min_skill_attempts = min_skill_attempts
        self.min_difficulty_attempts = min_difficulty_attempts
        self.default_difficulty = default_difficulty
        self.learn_structure = learn_structure

    def _fit_config(self) -> FitConfig:
        return FitConfig(
            restarts=self.restarts,
            max_iters=self.max_iters,
            tol=self.tol,
            seed=self.seed,
            guess_cap=self.guess_cap,
            slip_cap=self.slip_cap,
        )

    def fit(self, interactions, y=None):
        records = as_records(interactions)
        if not records:
            raise ValueError("cannot fit on an empty interaction log")
        self.skill_params_ = fit_all_skills(
            records, self._fit_config(), min_attempts=self.min_skill_attempts
        )
        self.difficulty_ = compute_difficulty_table(
            records,
            min_attempts=self.min_difficulty_attempts,
            default_level=self.default_difficulty,
        )
        rows = build_evidence_rows(records, self.difficulty_, self.skill_params_, self.bins)
        structure = (
            learn_structure_cmi(rows, alpha=self.alpha, bins=self.bins)
            if self.learn_structure
            else fixed_structure()
        )
        self.tan_ = fit_cpts(rows, structure=structure, alpha=self.alpha, bins=self.bins)
        self.n_interactions_ = len(records)
        return self

    def _check_fitted(self):
        if not hasattr(self, "tan_"):
            raise NotFittedError("call fit before predicting")

    def _evidence_for(self, records: list[InteractionRecord]) -> list[EvidenceRow]:
        return build_evidence_rows(records, self.difficulty_, self.skill_params_, self.bins)

    def predict_proba(self, interactions):
        self._check_fitted()
        records = as_records(interactions)
        order = sorted(range(len(records)), key=lambda i: (records[i].student, records[i].seq_index))
        rows = self._evidence_for([records[i] for i in order])
        p1 = np.empty(len(records))
        for pos, i in enumerate(order):
            p1[i] = predict(self.tan_, rows[pos])
        return np.column_stack([1.0 - p1, p1])

    def predict(self, interactions):
        return (self.predict_proba(interactions)[:, 1] >= 0.5).astype(int)

    def score_interactions(self, interactions) -> list[ScoredPrediction]:
        """Scores paired with labels and identity, in (student, seq) order."""
        self._check_fitted()
        records = sorted(as_records(interactions), key=lambda r: (r.student, r.seq_index))
        rows = self._evidence_for(records)
        return [
            ScoredPrediction(
                score=predict(self.tan_, row),
                label=rec.outcome,
                student=rec.student,
                seq_index=rec.seq_index,
            )
            for rec, row in zip(records, rows)
        ]

    def explain(self, interactions) -> list[dict]:
        """Per-interaction breakdown: features, per-class factors, posterior.

        The reported factors multiply (with the class prior) to the exact
        joints used for the posterior, so explanations can be audited
        against the score.
        """
        self._check_fitted()
        records = sorted(as_records(interactions), key=lambda r: (r.student, r.seq_index))
        rows = self._evidence_for(records)
        out = []
        for rec, row in zip(records, rows):
            j0 = joint_probability(self.tan_, row, 0)
            j1 = joint_probability(self.tan_, row, 1)
            out.append(
                {
                    "student": rec.student,
                    "seq_index": rec.seq_index,
                    "problem": rec.problem,
                    "features": {
                        "skill": row.skill,
                        "mastery_bin": row.mastery_bin,
                        "sr_bin": row.sr_bin,
                        "df_bin": row.df_bin,
                        "difficulty": row.difficulty,
                    },
                    "label": rec.outcome,
                    "prior": {
                        "y0": float(self.tan_.class_prior[0]),
                        "y1": float(self.tan_.class_prior[1]),
                    },
                    "factors": {
                        "y0": factor_values(self.tan_, row, 0),
                        "y1": factor_values(self.tan_, row, 1),
                    },
                    "joint": {"y0": j0, "y1": j1},
                    "score": j1 / (j0 + j1),
                }
            )
        return out
