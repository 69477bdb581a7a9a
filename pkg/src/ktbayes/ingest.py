"""Parse raw tutoring-system CSV logs into cleaned, ordered interaction records.

Raw logs are one row per attempt with configurable column names. Cleaning
keeps each student's first attempt on each problem, drops rows without a
skill tag, and re-indexes every student's surviving attempts 1..n in
chronological order. Cross-validation folds are assigned at the student
level so no student contributes to both train and test of a fold.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, fields
from pathlib import Path
from typing import IO, Iterable, Union

import numpy as np

from .validation import SchemaError

# splits multi-tagged skill fields such as "412,413" or "fractions~ratios"
_SKILL_LIST_SEP = re.compile(r"[,~]")

NORMALIZED_HEADER = ["student", "problem", "skill", "outcome", "seq_index"]


@dataclass(frozen=True)
class CsvSchema:
    """Column names of the five required raw-log fields.

    ``original`` is optional; when set, rows whose value in that column is 0
    are treated as scaffolding and dropped during cleaning.
    """

    order: str = "order_id"
    student: str = "user_id"
    problem: str = "problem_id"
    skill: str = "skill"
    correct: str = "correct"
    original: str | None = None

    def required_columns(self) -> list[str]:
        return [self.order, self.student, self.problem, self.skill, self.correct]


@dataclass(frozen=True)
class RawRow:
    row_id: int
    student_id: str
    problem_id: str
    skill_id: str
    outcome: int
    order_key: int
    original: int | None = None


@dataclass(frozen=True)
class InteractionRecord:
    student: str
    problem: str
    skill: str
    outcome: int
    seq_index: int


@dataclass(frozen=True)
class ParseIssue:
    line: int
    message: str


@dataclass
class ParseResult:
    rows: list[RawRow]
    issues: list[ParseIssue]


@dataclass
class CleaningReport:
    input_rows: int = 0
    missing_skill: int = 0
    scaffolding: int = 0
    exact_duplicates: int = 0
    repeat_attempts: int = 0
    kept: int = 0

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    seed: int
    student_to_fold: dict[str, int]

    def students_in_fold(self, fold: int) -> list[str]:
        return sorted(s for s, f in self.student_to_fold.items() if f == fold)


def _first_skill_tag(raw: str) -> str:
    """A multi-tagged skill field keeps only its first listed tag."""
    return _SKILL_LIST_SEP.split(raw, maxsplit=1)[0].strip()


def _parse_binary(value: str, column: str) -> int:
    v = value.strip()
    if v == "0":
        return 0
    if v == "1":
        return 1
    raise ValueError(f"{column} must be 0 or 1, got {value!r}")


def parse_interactions(
    source: Union[str, Path, IO], schema: CsvSchema | None = None
) -> ParseResult:
    """Read a raw interaction CSV into RawRows.

    ``source`` is a path or an open text/binary stream of UTF-8 CSV with a
    header row. Malformed data lines are collected as ParseIssues with their
    line number instead of being silently dropped; a missing required column
    raises SchemaError.
    """
    schema = schema or CsvSchema()
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            return parse_interactions(fh, schema)
    if not isinstance(source, io.TextIOBase):
        source = io.TextIOWrapper(source, encoding="utf-8", newline="")

    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("input file is empty, expected a CSV header row") from None
    header = [h.strip() for h in header]
    missing = [c for c in schema.required_columns() if c not in header]
    if missing:
        raise SchemaError(f"missing required column(s): {', '.join(missing)}")
    col = {name: header.index(name) for name in header}
    orig_idx = col.get(schema.original) if schema.original else None
    if schema.original and orig_idx is None:
        raise SchemaError(f"missing original-flag column: {schema.original}")

    rows: list[RawRow] = []
    issues: list[ParseIssue] = []
    for record in reader:
        line = reader.line_num
        if not record or all(not f.strip() for f in record):
            continue
        if len(record) < len(header):
            issues.append(ParseIssue(line, f"expected {len(header)} fields, got {len(record)}"))
            continue
        try:
            student = record[col[schema.student]].strip()
            problem = record[col[schema.problem]].strip()
            if not student or not problem:
                raise ValueError("empty student or problem id")
            outcome = _parse_binary(record[col[schema.correct]], schema.correct)
            order_key = int(record[col[schema.order]].strip())
            original = None
            if orig_idx is not None:
                original = _parse_binary(record[orig_idx], schema.original)
            skill = _first_skill_tag(record[col[schema.skill]])
        except ValueError as exc:
            issues.append(ParseIssue(line, str(exc)))
            continue
        rows.append(
            RawRow(
                row_id=line,
                student_id=student,
                problem_id=problem,
                skill_id=skill,
                outcome=outcome,
                order_key=order_key,
                original=original,
            )
        )
    return ParseResult(rows=rows, issues=issues)


def clean(rows: Iterable[RawRow]) -> tuple[list[InteractionRecord], CleaningReport]:
    """Apply the cleaning rules and re-index survivors per student.

    Dropped in order: rows without a skill tag, scaffolding rows (original
    flag 0), exact duplicate rows, and repeat attempts on a (student, problem)
    pair (only the chronologically first attempt survives). Survivors are
    sorted per student by order key (row id breaks ties) and get seq_index
    1..n. Cleaning never fails; the report counts drops by reason.
    """
    rows = list(rows)
    report = CleaningReport(input_rows=len(rows))

    staged: list[RawRow] = []
    for row in rows:
        if not row.skill_id:
            report.missing_skill += 1
        elif row.original == 0:
            report.scaffolding += 1
        else:
            staged.append(row)

    seen_payload: set[tuple] = set()
    deduped: list[RawRow] = []
    for row in staged:
        payload = (
            row.student_id,
            row.problem_id,
            row.skill_id,
            row.outcome,
            row.order_key,
            row.original,
        )
        if payload in seen_payload:
            report.exact_duplicates += 1
        else:
            seen_payload.add(payload)
            deduped.append(row)

    deduped.sort(key=lambda r: (r.student_id, r.order_key, r.row_id))
    first_attempts: list[RawRow] = []
    seen_pair: set[tuple[str, str]] = set()
    for row in deduped:
        pair = (row.student_id, row.problem_id)
        if pair in seen_pair:
            report.repeat_attempts += 1
        else:
            seen_pair.add(pair)
            first_attempts.append(row)

    records: list[InteractionRecord] = []
    seq = 0
    prev_student = None
    for row in first_attempts:
        seq = seq + 1 if row.student_id == prev_student else 1
        prev_student = row.student_id
        records.append(
            InteractionRecord(
                student=row.student_id,
                problem=row.problem_id,
                skill=row.skill_id,
                outcome=row.outcome,
                seq_index=seq,
            )
        )
    report.kept = len(records)
    return records, report


def split_folds(records: Iterable[InteractionRecord], k: int, seed: int) -> FoldAssignment:
    """Assign every student to one of k folds, sizes balanced within 1.

    The sorted student list is shuffled with a seeded generator and dealt
    round-robin, so the assignment is deterministic for fixed inputs.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    students = sorted({r.student for r in records})
    if len(students) < k:
        raise ValueError(f"need at least {k} students for {k} folds, got {len(students)}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(students))
    assignment = {students[idx]: i % k for i, idx in enumerate(order)}
    return FoldAssignment(k=k, seed=seed, student_to_fold=assignment)


def sort_records(records: Iterable[InteractionRecord]) -> list[InteractionRecord]:
    return sorted(records, key=lambda r: (r.student, r.seq_index))


def write_normalized(path: Union[str, Path], records: Iterable[InteractionRecord]) -> None:
    """Write records as the normalized CSV, sorted by (student, seq_index)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(NORMALIZED_HEADER)
        for r in sort_records(records):
            writer.writerow([r.student, r.problem, r.skill, r.outcome, r.seq_index])


def load_normalized(path: Union[str, Path]) -> list[InteractionRecord]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != NORMALIZED_HEADER:
            raise SchemaError(
                f"{path}: expected normalized header {','.join(NORMALIZED_HEADER)}"
            )
        records = [
            InteractionRecord(
                student=row[0],
                problem=row[1],
                skill=row[2],
                outcome=int(row[3]),
                seq_index=int(row[4]),
            )
            for row in reader
            if row
        ]
    return records
