"""Acceptance suite: one test per release criterion, each printing a
PASS line with its measured numbers (run with -s to see them inline)."""

import os
import time

import numpy as np
import pytest

from ktbayes import (
    BktParams,
    CsvSchema,
    FitConfig,
    apply_learning,
    clean,
    cross_validate,
    fit_bkt_em,
    parse_interactions,
    posterior_given_correct,
    posterior_given_incorrect,
    predict_correct,
)
from ktbayes.features import build_evidence_rows, compute_difficulty_table, discretize
from ktbayes.ingest import load_normalized, sort_records
from ktbayes.metrics import auc_scores
from ktbayes.tan import predict

from oracles import enum_joint_table, enum_posterior, pairwise_auc
from synth import simulate_interactions, simulate_sequences
from test_features import FIXTURE_PARAMS, read_expected
from test_tan import random_model, random_row

EVAL_TRUTHS = {
    "s_easy": BktParams(0.45, 0.30, 0.20, 0.05),
    "s_mid1": BktParams(0.30, 0.20, 0.15, 0.10),
    "s_mid2": BktParams(0.25, 0.15, 0.20, 0.10),
    "s_hard": BktParams(0.15, 0.10, 0.10, 0.10),
    "s_slow": BktParams(0.20, 0.05, 0.15, 0.05),
}


def test_criterion_1_equation_unit_and_property_suite():
    start = time.monotonic()
    hand = BktParams(p_init=0.5, p_learn=0.3, p_guess=0.2, p_slip=0.1)
    post = posterior_given_correct(hand, 0.5)
    assert abs(post - 0.8181818181818182) < 1e-9
    assert abs(apply_learning(hand, post) - 0.8727272727272727) < 1e-9
    assert abs(posterior_given_incorrect(hand, 0.5) - 0.1111111111111111) < 1e-9

    rng = np.random.default_rng(1234)
    draws = rng.uniform(0.0, 1.0, size=(10_000, 4))  # (guess, slip, learn, belief)
    for g, s, t, pl in draws:
        params = BktParams(0.5, t, g, s)
        up = posterior_given_correct(params, pl)
        down = posterior_given_incorrect(params, pl)
        learned = apply_learning(params, pl)
        emitted = predict_correct(params, pl)
        assert 0.0 <= up <= 1.0 and 0.0 <= down <= 1.0
        assert 0.0 <= learned <= 1.0 and 0.0 <= emitted <= 1.0
        if (1.0 - s) > g:  # informative evidence regime
            assert up >= pl - 1e-12
            assert down <= pl + 1e-12
        assert learned >= pl - 1e-12  # learning never decreases belief

    elapsed = time.monotonic() - start
    assert elapsed < 5.0
    print(f"criterion 1 PASS: hand values at 1e-9, 10000 property draws, {elapsed:.2f}s")


def test_criterion_2_bkt_parameter_recovery():
    start = time.monotonic()
    truth = BktParams(p_init=0.3, p_learn=0.2, p_guess=0.15, p_slip=0.1)
    rng = np.random.default_rng(42)
    sequences = simulate_sequences(truth, 500, 50, rng)
    histories = []
    fitted = fit_bkt_em(
        sequences, FitConfig(restarts=5, seed=42), collect_history=histories
    )
    errors = {
        name: abs(getattr(fitted, name) - getattr(truth, name))
        for name in ("p_init", "p_learn", "p_guess", "p_slip")
    }
    assert all(err <= 0.05 for err in errors.values()), errors
    assert len(histories) == 5
    for history in histories:
        assert all(b >= a - 1e-9 for a, b in zip(history, history[1:]))
    elapsed = time.monotonic() - start
    assert elapsed < 30.0
    print(
        "criterion 2 PASS: recovery errors "
        + ", ".join(f"{k}={v:.4f}" for k, v in errors.items())
        + f", monotone LL, {elapsed:.2f}s"
    )


def test_criterion_3_difficulty_and_profile_fixture(data_dir):
    train = load_normalized(data_dir / "feature_train.csv")
    student = load_normalized(data_dir / "student_six.csv")
    table = compute_difficulty_table(train)

    # fallback rule: under-observed and unseen problems resolve to 5
    assert "P3" not in table.levels and table.level_for("P3") == 5
    assert table.level_for("P4") == 5
    # floor binning, including the clamp at a perfect rate
    assert table.level_for("P1") == 6
    assert table.level_for("P2") == 10
    assert discretize(1.0, 10) == 9 and discretize(0.87273, 10) == 8

    rows = build_evidence_rows(student, table, FIXTURE_PARAMS, bins=10)
    assert rows == read_expected(data_dir)

    # strictly-prior probe: truncating the future never changes earlier rows
    ordered = sort_records(student)
    for t in range(1, len(ordered) + 1):
        assert build_evidence_rows(ordered[:t], table, FIXTURE_PARAMS, bins=10) == rows[:t]

    print("criterion 3 PASS: fallback, floor binning, and no-leakage probe exact")


def test_criterion_4_tan_matches_brute_force():
    start = time.monotonic()
    rng = np.random.default_rng(99)
    checked = 0
    for _ in range(100):
        model = random_model(rng, max_card=4)
        table = enum_joint_table(model)
        assert abs(sum(table.values()) - 1.0) < 1e-9
        for _ in range(5):
            row = random_row(rng, model)
            p = predict(model, row)
            assert abs(p - enum_posterior(model, row)) < 1e-10
            from ktbayes.tan import joint_probability

            j0 = joint_probability(model, row, 0)
            j1 = joint_probability(model, row, 1)
            assert abs(p + j0 / (j0 + j1) - 1.0) < 1e-12
            checked += 1
    elapsed = time.monotonic() - start
    assert elapsed < 10.0
    print(f"criterion 4 PASS: {checked} rows across 100 random models, {elapsed:.2f}s")


def test_criterion_5_auc_matches_pairwise_oracle():
    assert auc_scores([0.9, 0.8, 0.4, 0.3], [1, 0, 1, 0]) == 0.75
    rng = np.random.default_rng(77)
    for _ in range(100):
        n = int(rng.integers(2, 1001))
        # coarse score grid forces plenty of ties
        scores = rng.choice(np.linspace(0, 1, 12), size=n)
        labels = rng.integers(0, 2, size=n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        fast = auc_scores(scores, labels)
        slow = pairwise_auc(scores.tolist(), labels.tolist())
        assert abs(fast - slow) < 1e-9
    print("criterion 5 PASS: 100 random instances match the pairwise oracle")


def test_criterion_6_end_to_end_synthetic_signal():
    start = time.monotonic()
    records = simulate_interactions(EVAL_TRUTHS, n_students=200, rounds=15, seed=202)
    assert len({r.student for r in records}) == 200
    report = cross_validate(
        records, k=5, seed=202, fit_config=FitConfig(restarts=5, seed=202)
    )
    again = cross_validate(
        records, k=5, seed=202, fit_config=FitConfig(restarts=5, seed=202)
    )
    assert report == again  # deterministic under a fixed seed
    assert report.avg_auc >= 0.65
    elapsed = time.monotonic() - start
    assert elapsed < 60.0
    print(
        f"criterion 6 PASS: avg AUC {report.avg_auc:.4f} (chance 0.5), "
        f"avg RMSE {report.avg_rmse:.4f}, deterministic, {elapsed:.1f}s"
    )


REFERENCE_AUC = 0.801
REFERENCE_RMSE = 0.411
DATASET_ENV = "KTBAYES_ASSISTMENTS_CSV"


@pytest.mark.skipif(
    not os.environ.get(DATASET_ENV),
    reason=f"real dataset not supplied; set {DATASET_ENV} to run (never gates CI)",
)
def test_criterion_7_public_dataset_reproduction():
    """Optional full-scale check against the 2009 skill-builder benchmark."""
    schema = CsvSchema(
        order="order_id",
        student="user_id",
        problem="problem_id",
        skill="skill_id",
        correct="correct",
        original="original",
    )
    result = parse_interactions(os.environ[DATASET_ENV], schema)
    records, report = clean(result.rows)
    assert records, "dataset produced no usable interactions"
    eval_report = cross_validate(records, k=5, seed=0, fit_config=FitConfig(seed=0))
    gap_auc = REFERENCE_AUC - eval_report.avg_auc
    gap_rmse = eval_report.avg_rmse - REFERENCE_RMSE
    print(
        f"criterion 7: avg AUC {eval_report.avg_auc:.4f} (reference {REFERENCE_AUC}, "
        f"gap {gap_auc:+.4f}), avg RMSE {eval_report.avg_rmse:.4f} "
        f"(reference {REFERENCE_RMSE}, gap {gap_rmse:+.4f}); cleaning: {report.as_dict()}"
    )
    assert eval_report.avg_auc >= 0.77
    assert eval_report.avg_rmse <= 0.43
