"""Student-level k-fold cross-validation of next-attempt prediction.

Per fold, the per-skill parameters, the difficulty table, and the TAN are
fit on training students only. Test students are then replayed in sequence
order: decision state (mastery beliefs, profile tallies) evolves from each
test student's own unfolding history while the fitted models stay frozen.
Every test interaction gets a score and folds are summarized with AUC and
RMSE.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from .bkt import FitConfig, fit_all_skills
from .features import build_evidence_rows, compute_difficulty_table
from .ingest import FoldAssignment, InteractionRecord, sort_records, split_folds
from .metrics import ScoredPrediction, auc, rmse
from .tan import fit_cpts, fixed_structure, learn_structure_cmi, predict


@dataclass
class EvalReport:
    fold_auc: list[float]
    fold_rmse: list[float]
    avg_auc: float
    avg_rmse: float
    n_students: int
    n_interactions: int
    n_skills: int
    n_problems: int
    config: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "fold_auc": self.fold_auc,
            "fold_rmse": self.fold_rmse,
            "avg_auc": self.avg_auc,
            "avg_rmse": self.avg_rmse,
            "n_students": self.n_students,
            "n_interactions": self.n_interactions,
            "n_skills": self.n_skills,
            "n_problems": self.n_problems,
            "config": self.config,
        }


def _macro_auc(preds: list[ScoredPrediction]) -> float:
    """Mean per-student AUC over students whose labels have both classes."""
    by_student: dict[str, list[ScoredPrediction]] = {}
    for p in preds:
        by_student.setdefault(p.student, []).append(p)
    per_student = []
    for student in sorted(by_student):
        group = by_student[student]
        labels = {p.label for p in group}
        if labels == {0, 1}:
            per_student.append(auc(group))
    if not per_student:
        raise ValueError("macro AUC undefined: no student has both outcome classes")
    return float(np.mean(per_student))


def score_fold(
    train: list[InteractionRecord],
    test: list[InteractionRecord],
    bins: int,
    alpha: float,
    fit_config: FitConfig,
    min_skill_attempts: int = 5,
    learn_structure: bool = False,
) -> list[ScoredPrediction]:
    """Fit the pipeline on ``train`` and score every ``test`` interaction."""
    params = fit_all_skills(train, fit_config, min_attempts=min_skill_attempts)
    table = compute_difficulty_table(train)
    train_rows = build_evidence_rows(train, table, params, bins)
    structure = (
        learn_structure_cmi(train_rows, alpha=alpha, bins=bins)
        if learn_structure
        else fixed_structure()
    )
    model = fit_cpts(train_rows, structure=structure, alpha=alpha, bins=bins)

    ordered_test = sort_records(test)
    test_rows = build_evidence_rows(ordered_test, table, params, bins)
    return [
        ScoredPrediction(
            score=predict(model, row),
            label=rec.outcome,
            student=rec.student,
            seq_index=rec.seq_index,
        )
        for rec, row in zip(ordered_test, test_rows)
    ]


def cross_validate(
    records: Iterable[InteractionRecord],
    k: int = 5,
    seed: int = 0,
    *,
    bins: int = 10,
    alpha: float = 1.0,
    fit_config: FitConfig | None = None,
    min_skill_attempts: int = 5,
    learn_structure: bool = False,
    macro_auc: bool = False,
    folds: FoldAssignment | None = None,
) -> EvalReport:
    """Run the full k-fold protocol and report per-fold and averaged metrics.

    Folds partition students, never interactions. ``folds`` overrides the
    seeded assignment (useful for controlled experiments); otherwise the
    assignment derives from (records, k, seed) and the BKT fitting seed
    defaults to the same root seed.
    """
    records = sort_records(records)
    if not records:
        raise ValueError("no interactions to evaluate")
    fit_config = fit_config or FitConfig(seed=seed)
    assignment = folds or split_folds(records, k, seed)

    fold_aucs: list[float] = []
    fold_rmses: list[float] = []
    for f in range(assignment.k):
        train = [r for r in records if assignment.student_to_fold[r.student] != f]
        test = [r for r in records if assignment.student_to_fold[r.student] == f]
        preds = score_fold(
            train,
            test,
            bins=bins,
            alpha=alpha,
            fit_config=fit_config,
            min_skill_attempts=min_skill_attempts,
            learn_structure=learn_structure,
        )
        fold_aucs.append(_macro_auc(preds) if macro_auc else auc(preds))
        fold_rmses.append(rmse(preds))

    return EvalReport(
        fold_auc=fold_aucs,
        fold_rmse=fold_rmses,
        avg_auc=float(np.mean(fold_aucs)),
        avg_rmse=float(np.mean(fold_rmses)),
        n_students=len({r.student for r in records}),
        n_interactions=len(records),
        n_skills=len({r.skill for r in records}),
        n_problems=len({r.problem for r in records}),
        config={
            "k": assignment.k,
            "seed": seed,
            "bins": bins,
            "alpha": alpha,
            "macro_auc": macro_auc,
            "learn_structure": learn_structure,
            "min_skill_attempts": min_skill_attempts,
            "bkt": {
                "restarts": fit_config.restarts,
                "max_iters": fit_config.max_iters,
                "tol": fit_config.tol,
                "seed": fit_config.seed,
                "guess_cap": fit_config.guess_cap,
                "slip_cap": fit_config.slip_cap,
            },
        },
    )


def write_report_csv(path: Union[str, Path], report: EvalReport) -> None:
    """Machine-readable per-fold metrics with a trailing average row."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["fold", "auc", "rmse"])
        for i, (a, r) in enumerate(zip(report.fold_auc, report.fold_rmse)):
            writer.writerow([i, f"{a:.6f}", f"{r:.6f}"])
        writer.writerow(["avg", f"{report.avg_auc:.6f}", f"{report.avg_rmse:.6f}"])


def format_report(report: EvalReport) -> str:
    lines = [
        f"students={report.n_students} interactions={report.n_interactions} "
        f"skills={report.n_skills} problems={report.n_problems}",
        f"{'fold':>4}  {'auc':>8}  {'rmse':>8}",
    ]
    for i, (a, r) in enumerate(zip(report.fold_auc, report.fold_rmse)):
        lines.append(f"{i:>4}  {a:>8.4f}  {r:>8.4f}")
    lines.append(f"{'avg':>4}  {report.avg_auc:>8.4f}  {report.avg_rmse:>8.4f}")
    return "\n".join(lines)
