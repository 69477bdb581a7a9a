import io

import pytest

from ktbayes.ingest import (
    CsvSchema,
    InteractionRecord,
    RawRow,
    clean,
    load_normalized,
    parse_interactions,
    sort_records,
    split_folds,
    write_normalized,
)
from ktbayes.validation import SchemaError


def make_csv(*lines):
    return io.StringIO("\n".join(lines) + "\n")


class TestParse:
    def test_single_valid_line(self):
        result = parse_interactions(
            make_csv("order_id,user_id,problem_id,skill,correct", "7,s1,p1,frac,1")
        )
        assert result.issues == []
        assert result.rows == [
            RawRow(row_id=2, student_id="s1", problem_id="p1", skill_id="frac",
                   outcome=1, order_key=7)
        ]

    def test_bad_outcome_reported_not_dropped_silently(self):
        result = parse_interactions(
            make_csv("order_id,user_id,problem_id,skill,correct", "7,s1,p1,frac,2")
        )
        assert result.rows == []
        assert len(result.issues) == 1
        assert result.issues[0].line == 2

    def test_missing_column_is_schema_error(self):
        with pytest.raises(SchemaError):
            parse_interactions(make_csv("user_id,problem_id,skill,correct", "s1,p1,f,1"))

    def test_fixture_file(self, data_dir):
        result = parse_interactions(data_dir / "raw_three.csv")
        assert result.issues == []
        assert result.rows == [
            RawRow(2, "stu1", "p1", "s1", 1, 11),
            RawRow(3, "stu1", "p2", "s2", 0, 12),
            RawRow(4, "stu2", "p1", "s1", 1, 13),
        ]

    def test_fixture_round_trips(self, data_dir):
        first = parse_interactions(data_dir / "raw_three.csv")
        lines = ["order_id,user_id,problem_id,skill,correct"]
        for r in first.rows:
            lines.append(f"{r.order_key},{r.student_id},{r.problem_id},{r.skill_id},{r.outcome}")
        second = parse_interactions(make_csv(*lines))
        assert second.rows == first.rows

    def test_multi_tag_skill_keeps_first(self):
        result = parse_interactions(
            make_csv("order_id,user_id,problem_id,skill,correct", '7,s1,p1,"412,413",1')
        )
        assert result.rows[0].skill_id == "412"

    def test_custom_schema_and_original_flag(self):
        schema = CsvSchema(order="t", student="uid", problem="item",
                           skill="kc", correct="ok", original="orig")
        result = parse_interactions(
            make_csv("t,uid,item,kc,ok,orig", "1,s1,p1,f,1,1", "2,s1,p2,f,1,0"),
            schema,
        )
        assert [r.original for r in result.rows] == [1, 0]


class TestClean:
    def test_first_attempt_wins(self):
        rows = [
            RawRow(1, "s1", "p1", "f", 0, 9),
            RawRow(2, "s1", "p1", "f", 1, 5),
        ]
        records, report = clean(rows)
        assert [r.outcome for r in records] == [1]
        assert report.repeat_attempts == 1

    def test_missing_skill_dropped(self):
        records, report = clean([RawRow(1, "s1", "p1", "", 1, 1)])
        assert records == []
        assert report.missing_skill == 1

    def test_scaffolding_dropped_when_flag_present(self):
        rows = [
            RawRow(1, "s1", "p1", "f", 1, 1, original=1),
            RawRow(2, "s1", "p2", "f", 1, 2, original=0),
        ]
        records, report = clean(rows)
        assert [r.problem for r in records] == ["p1"]
        assert report.scaffolding == 1

    def test_exact_duplicates_counted_separately(self):
        rows = [
            RawRow(1, "s1", "p1", "f", 1, 3),
            RawRow(2, "s1", "p1", "f", 1, 3),   # same payload, new line
            RawRow(3, "s1", "p1", "f", 0, 9),   # later re-attempt
        ]
        _, report = clean(rows)
        assert report.exact_duplicates == 1
        assert report.repeat_attempts == 1

    def test_reindexing(self):
        rows = [
            RawRow(1, "s1", "p1", "f", 1, 3),
            RawRow(2, "s1", "p2", "f", 0, 7),
            RawRow(3, "s1", "p3", "f", 1, 20),
        ]
        records, _ = clean(rows)
        assert [r.seq_index for r in records] == [1, 2, 3]

    def test_idempotent(self):
        rows = [
            RawRow(1, "s1", "p1", "f", 1, 9),
            RawRow(2, "s1", "p1", "f", 0, 5),
            RawRow(3, "s2", "p1", "", 1, 1),
            RawRow(4, "s2", "p2", "g", 1, 4),
        ]
        once, _ = clean(rows)
        again, report = clean(
            RawRow(i, r.student, r.problem, r.skill, r.outcome, r.seq_index)
            for i, r in enumerate(once)
        )
        assert again == once
        assert report.input_rows == report.kept

    def test_no_duplicate_problems_per_student(self):
        rows = [RawRow(i, f"s{i % 3}", f"p{i % 4}", "f", i % 2, i) for i in range(30)]
        records, _ = clean(rows)
        for student in {r.student for r in records}:
            problems = [r.problem for r in records if r.student == student]
            assert len(problems) == len(set(problems))


def _records(n_students, per_student=1):
    return [
        InteractionRecord(f"s{i:03d}", f"p{j}", "f", 1, j + 1)
        for i in range(n_students)
        for j in range(per_student)
    ]


class TestFolds:
    def test_equal_split(self):
        assign = split_folds(_records(10), k=5, seed=0)
        sizes = [len(assign.students_in_fold(f)) for f in range(5)]
        assert sizes == [2, 2, 2, 2, 2]

    def test_deterministic(self):
        a = split_folds(_records(10), k=5, seed=3)
        b = split_folds(_records(10), k=5, seed=3)
        assert a == b

    def test_eleven_students_five_folds(self):
        assign = split_folds(_records(11), k=5, seed=1)
        sizes = sorted(len(assign.students_in_fold(f)) for f in range(5))
        assert sizes == [2, 2, 2, 2, 3]

    def test_partition(self):
        records = _records(23)
        assign = split_folds(records, k=5, seed=9)
        students = {r.student for r in records}
        seen = []
        for f in range(5):
            seen.extend(assign.students_in_fold(f))
        assert sorted(seen) == sorted(students)
        assert len(seen) == len(set(seen))

    def test_too_few_students(self):
        with pytest.raises(ValueError):
            split_folds(_records(3), k=5, seed=0)

    def test_k_below_two(self):
        with pytest.raises(ValueError):
            split_folds(_records(10), k=1, seed=0)


class TestNormalizedIo:
    def test_round_trip(self, tmp_path):
        records = [
            InteractionRecord("s2", "p1", "f", 1, 1),
            InteractionRecord("s1", "p2", "g", 0, 2),
            InteractionRecord("s1", "p1", "f", 1, 1),
        ]
        path = tmp_path / "normalized.csv"
        write_normalized(path, records)
        loaded = load_normalized(path)
        assert loaded == sort_records(records)

    def test_write_is_deterministic(self, tmp_path):
        records = _records(7, per_student=3)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_normalized(a, records)
        write_normalized(b, list(reversed(records)))
        assert a.read_bytes() == b.read_bytes()

    def test_wrong_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(SchemaError):
            load_normalized(path)
