"""
Testes para AP e AUC, incluindo oráculos exaustivos em listas pequenas.
"""

import itertools

import numpy as np
import pytest

from src.core.metrics import (
    ScoredPrediction,
    average_precision,
    link_prediction_metrics,
    roc_auc,
)
from src.utils.exceptions import DataError

SCORE_GRID = np.round(np.arange(1, 9) / 10.0, 1)


def _oracle_ap(scores, labels):
    """AP pela definição: um ponto da curva por limiar distinto."""
    total_pos = sum(labels)
    ap, previous_recall = 0.0, 0.0
    for threshold in sorted(set(scores), reverse=True):
        predicted = [label for score, label in zip(scores, labels) if score >= threshold]
        tp = sum(predicted)
        recall = tp / total_pos
        ap += (recall - previous_recall) * tp / len(predicted)
        previous_recall = recall
    return ap


def _oracle_auc(scores, labels):
    """AUC por contagem de pares positivo/negativo (empate vale meio)."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


class TestAveragePrecision:
    """Testes para average_precision."""

    def test_example(self):
        assert average_precision([0.9, 0.8, 0.3], [1, 0, 1]) == pytest.approx(0.8333, abs=1e-4)

    def test_perfect_ranking(self):
        assert average_precision([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0

    def test_ties_count_as_one_block(self):
        assert average_precision([0.5, 0.5], [1, 0]) == 0.5

    def test_tie_result_independent_of_input_order(self):
        a = average_precision([0.7, 0.5, 0.5, 0.2], [0, 1, 0, 1])
        b = average_precision([0.7, 0.5, 0.5, 0.2], [0, 0, 1, 1])

        assert a == pytest.approx(b)

    def test_accepts_scored_predictions(self):
        preds = [ScoredPrediction(0.9, 1), ScoredPrediction(0.8, 0), ScoredPrediction(0.3, 1)]

        assert average_precision(preds) == pytest.approx(0.8333, abs=1e-4)

    def test_no_positives_raises(self):
        with pytest.raises(DataError):
            average_precision([0.1, 0.2], [0, 0])

    def test_empty_raises(self):
        with pytest.raises(DataError):
            average_precision([], [])

    def test_length_mismatch_raises(self):
        with pytest.raises(DataError):
            average_precision([0.1, 0.2], [1])


class TestRocAuc:
    """Testes para roc_auc."""

    def test_example(self):
        assert roc_auc([0.9, 0.8, 0.3], [1, 0, 1]) == pytest.approx(0.5)

    def test_all_tied(self):
        assert roc_auc([0.4, 0.4, 0.4], [1, 0, 1]) == pytest.approx(0.5)

    def test_inverted_ranking(self):
        assert roc_auc([0.1, 0.2, 0.8, 0.9], [1, 1, 0, 0]) == 0.0

    def test_single_class_raises(self):
        with pytest.raises(DataError):
            roc_auc([0.1, 0.2], [1, 1])


class TestExhaustiveOracles:
    """AP e AUC contra as definições em todas as rotulagens de listas pequenas."""

    @pytest.mark.parametrize("size", range(2, 9))
    def test_against_definitions(self, size):
        rng = np.random.default_rng(size)
        for labels in itertools.product((0, 1), repeat=size):
            scores = list(rng.choice(SCORE_GRID, size=size))
            labels = list(labels)
            if sum(labels) == 0:
                continue
            assert average_precision(scores, labels) == pytest.approx(
                _oracle_ap(scores, labels), abs=1e-12
            )
            if sum(labels) < size:
                assert roc_auc(scores, labels) == pytest.approx(
                    _oracle_auc(scores, labels), abs=1e-12
                )


class TestInvariances:
    """Propriedades de AP e AUC sob transformações dos escores e dos rótulos."""

    @pytest.fixture
    def sample(self):
        rng = np.random.default_rng(21)
        scores = rng.choice(SCORE_GRID, size=60)
        labels = (rng.random(60) < 0.4).astype(int)
        labels[:2] = [0, 1]
        return scores, labels

    @pytest.mark.parametrize(
        "transform",
        [
            np.exp,
            np.log,
            lambda s: 5.0 * s - 2.0,
            lambda s: s**3,
            lambda s: 1.0 / (1.0 + np.exp(-s)),
        ],
    )
    def test_monotone_transform_keeps_metrics(self, sample, transform):
        scores, labels = sample
        moved = transform(scores)

        assert average_precision(moved, labels) == pytest.approx(
            average_precision(scores, labels), abs=1e-12
        )
        assert roc_auc(moved, labels) == pytest.approx(roc_auc(scores, labels), abs=1e-12)

    def test_flipped_labels_mirror_auc(self, sample):
        scores, labels = sample

        flipped = roc_auc(scores, 1 - labels)

        assert flipped == pytest.approx(1.0 - roc_auc(scores, labels), abs=1e-12)

    def test_negated_scores_mirror_auc(self, sample):
        scores, labels = sample

        assert roc_auc(-scores, labels) == pytest.approx(1.0 - roc_auc(scores, labels), abs=1e-12)


class TestLinkPredictionMetrics:
    """Testes para link_prediction_metrics."""

    def test_separated_scores(self):
        metrics = link_prediction_metrics(np.array([0.9, 0.8]), np.array([0.1, 0.2]))

        assert metrics == {"ap": 1.0, "auc": 1.0}

    def test_identical_scores(self):
        metrics = link_prediction_metrics(np.full(3, 0.5), np.full(3, 0.5))

        assert metrics["ap"] == pytest.approx(0.5)
        assert metrics["auc"] == pytest.approx(0.5)
