import numpy as np
import pytest

from ktbayes.metrics import ScoredPrediction, auc, auc_scores, rmse, rmse_scores

from oracles import pairwise_auc


class TestAuc:
    def test_hand_case(self):
        assert auc_scores([0.9, 0.8, 0.4, 0.3], [1, 0, 1, 0]) == 0.75

    def test_perfect_separation(self):
        assert auc_scores([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0

    def test_all_ties(self):
        assert auc_scores([0.5, 0.5, 0.5, 0.5], [1, 0, 1, 0]) == 0.5

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            auc_scores([0.1, 0.2], [1, 1])

    def test_matches_pairwise_oracle(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            n = int(rng.integers(2, 400))
            scores = rng.choice([0.1, 0.25, 0.5, 0.5, 0.75, 0.9], size=n)
            labels = rng.integers(0, 2, size=n)
            if labels.min() == labels.max():
                labels[0] = 1 - labels[0]
            assert auc_scores(scores, labels) == pytest.approx(
                pairwise_auc(scores.tolist(), labels.tolist()), abs=1e-9
            )

    def test_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            scores = rng.uniform(0, 1, 200)
            labels = rng.integers(0, 2, 200)
            if labels.min() == labels.max():
                labels[0] = 1 - labels[0]
            base = auc_scores(scores, labels)
            a, b = float(rng.uniform(0.5, 3)), float(rng.uniform(-2, 2))
            for transform in (
                lambda s: a * s + b,
                np.exp,
                lambda s: np.tan(s),           # 0..1 stays in a monotone branch
                lambda s: s ** 3,
            ):
                assert auc_scores(transform(scores), labels) == pytest.approx(
                    base, abs=1e-12
                )

    def test_prediction_list_wrapper(self):
        preds = [
            ScoredPrediction(0.9, 1), ScoredPrediction(0.8, 0),
            ScoredPrediction(0.4, 1), ScoredPrediction(0.3, 0),
        ]
        assert auc(preds) == 0.75


class TestRmse:
    def test_exact_predictions(self):
        assert rmse_scores([1.0, 0.0, 1.0], [1, 0, 1]) == 0.0

    def test_all_half(self):
        assert rmse_scores([0.5] * 6, [1, 0, 0, 1, 1, 0]) == 0.5

    def test_hand_case(self):
        assert rmse_scores([0.8, 0.3], [1, 0]) == pytest.approx(
            0.2549509756796392, abs=1e-12
        )

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            rmse_scores([], [])

    def test_order_invariant(self):
        rng = np.random.default_rng(10)
        scores = rng.uniform(0, 1, 100)
        labels = rng.integers(0, 2, 100)
        perm = rng.permutation(100)
        assert rmse_scores(scores, labels) == pytest.approx(
            rmse_scores(scores[perm], labels[perm]), abs=1e-12
        )

    def test_prediction_list_wrapper(self):
        preds = [ScoredPrediction(0.8, 1), ScoredPrediction(0.3, 0)]
        assert rmse(preds) == pytest.approx(0.2549509756796392, abs=1e-12)
