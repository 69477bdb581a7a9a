"""Evidence features computed per interaction.

Five features describe each attempt: the skill id, the discretized mastery
belief for that skill, the student's cumulative correctness rate on the
skill (sr_profile), the student's cumulative correctness rate at the current
problem's difficulty level (df_profile), and the problem difficulty itself.
Difficulty comes from a table of first-attempt success rates built on
training data only; both profiles use the student's history strictly before
the current attempt, so no feature ever depends on the label it helps
predict.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Union

from .bkt import (
    BktParams,
    DEFAULT_PARAMS,
    apply_learning,
    posterior_given_correct,
    posterior_given_incorrect,
)
from .ingest import InteractionRecord, sort_records

DIFFICULTY_LEVELS = 11  # levels 0..10
DEFAULT_DIFFICULTY = 5
MIN_DIFFICULTY_ATTEMPTS = 4

FEATURE_DUMP_HEADER = [
    "student",
    "seq_index",
    "skill",
    "mastery_bin",
    "sr_bin",
    "df_bin",
    "difficulty",
    "label",
]


@dataclass(frozen=True)
class DifficultyTable:
    """Per-problem difficulty levels; unmapped problems resolve to the default."""

    levels: dict[str, int]
    default_level: int = DEFAULT_DIFFICULTY

    def level_for(self, problem: str) -> int:
        return self.levels.get(problem, self.default_level)


@dataclass
class ProfileState:
    """Running per-student tallies over interactions strictly before now."""

    skill_attempts: dict[str, int] = field(default_factory=dict)
    skill_correct: dict[str, int] = field(default_factory=dict)
    level_attempts: dict[int, int] = field(default_factory=dict)
    level_correct: dict[int, int] = field(default_factory=dict)

    def advance(self, skill: str, level: int, outcome: int) -> None:
        self.skill_attempts[skill] = self.skill_attempts.get(skill, 0) + 1
        self.skill_correct[skill] = self.skill_correct.get(skill, 0) + outcome
        self.level_attempts[level] = self.level_attempts.get(level, 0) + 1
        self.level_correct[level] = self.level_correct.get(level, 0) + outcome


@dataclass(frozen=True)
class EvidenceRow:
    """The discretized five-feature vector plus the correctness label.

    ``sr_bin`` and ``df_bin`` use bin index B (one past the last value bin)
    as the no-history sentinel for cold starts.
    """

    skill: str
    mastery_bin: int
    sr_bin: int
    df_bin: int
    difficulty: int
    label: int


def compute_difficulty_table(
    train: Iterable[InteractionRecord],
    min_attempts: int = MIN_DIFFICULTY_ATTEMPTS,
    default_level: int = DEFAULT_DIFFICULTY,
) -> DifficultyTable:
    """Map each sufficiently-attempted training problem to a level 0..10.

    Cleaned records hold one first attempt per (student, problem), so the
    level is floor(success_rate * 10) over those first attempts, computed in
    integer arithmetic to keep exact ratios exact. Problems with fewer than
    ``min_attempts`` attempts stay out of the map and resolve to the default.
    Build this from the training fold only; test problems unseen in training
    then fall back to the default level.
    """
    attempts: dict[str, int] = {}
    correct: dict[str, int] = {}
    for r in train:
        attempts[r.problem] = attempts.get(r.problem, 0) + 1
        correct[r.problem] = correct.get(r.problem, 0) + r.outcome
    levels = {
        problem: (10 * correct[problem]) // n
        for problem, n in attempts.items()
        if n >= min_attempts
    }
    return DifficultyTable(levels=levels, default_level=default_level)


def sr_profile(state: ProfileState, skill: str) -> float | None:
    """Cumulative correctness rate on this skill, or None with no history."""
    n = state.skill_attempts.get(skill, 0)
    if n == 0:
        return None
    return state.skill_correct.get(skill, 0) / n


def df_profile(state: ProfileState, level: int) -> float | None:
    """Cumulative correctness rate at this difficulty level, or None."""
    n = state.level_attempts.get(level, 0)
    if n == 0:
        return None
    return state.level_correct.get(level, 0) / n


def discretize(value: float, bins: int) -> int:
    """Equal-width bin index floor(value * bins), clamped to bins-1 at 1.0.

    The 1e-9 nudge keeps exact count ratios (7/10 attempts and the like) in
    their intended bin despite binary floating point.
    """
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"value must be in [0, 1], got {value!r}")
    return min(int(value * bins + 1e-9), bins - 1)


def _profile_bin(value: float | None, bins: int) -> int:
    return bins if value is None else discretize(value, bins)


def build_evidence_rows(
    records: Iterable[InteractionRecord],
    table: DifficultyTable,
    params_by_skill: dict[str, BktParams],
    bins: int = 10,
) -> list[EvidenceRow]:
    """One evidence row per record, in (student, seq_index) order.

    Per student the mastery belief and profile tallies replay the history in
    sequence order: each row is built from state strictly before its own
    outcome, then the outcome advances the state. Skills absent from
    ``params_by_skill`` use the default parameters.
    """
    rows: list[EvidenceRow] = []
    current_student = None
    beliefs: dict[str, float] = {}
    state = ProfileState()
    for r in sort_records(records):
        if r.student != current_student:
            current_student = r.student
            beliefs = {}
            state = ProfileState()
        params = params_by_skill.get(r.skill, DEFAULT_PARAMS)
        level = table.level_for(r.problem)
        prior = beliefs.get(r.skill, params.p_init)
        rows.append(
            EvidenceRow(
                skill=r.skill,
                mastery_bin=discretize(prior, bins),
                sr_bin=_profile_bin(sr_profile(state, r.skill), bins),
                df_bin=_profile_bin(df_profile(state, level), bins),
                difficulty=level,
                label=r.outcome,
            )
        )
        if r.outcome == 1:
            post = posterior_given_correct(params, prior)
        else:
            post = posterior_given_incorrect(params, prior)
        beliefs[r.skill] = apply_learning(params, post)
        state.advance(r.skill, level, r.outcome)
    return rows


def write_feature_dump(
    path: Union[str, Path],
    records: Iterable[InteractionRecord],
    rows: list[EvidenceRow],
) -> None:
    """Debug dump pairing each record with its evidence row."""
    ordered = sort_records(records)
    if len(ordered) != len(rows):
        raise ValueError(
            f"{len(ordered)} records but {len(rows)} evidence rows"
        )
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FEATURE_DUMP_HEADER)
        for rec, row in zip(ordered, rows):
            writer.writerow(
                [
                    rec.student,
                    rec.seq_index,
                    row.skill,
                    row.mastery_bin,
                    row.sr_bin,
                    row.df_bin,
                    row.difficulty,
                    row.label,
                ]
            )
