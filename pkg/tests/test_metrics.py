"""Pruebas de AUC Mann–Whitney, distancia L2 y serialización de reportes."""

import csv
import io
import json

import numpy as np
import pytest
from scipy.special import expit

from app.errors import LabelError, ShapeError, UndefinedMetricError
from app.metrics.auc import auc, mean_auc
from app.metrics.distance import l2_distance
from app.metrics.report import SPEC_COLUMNS, make_report, report_to_json, reports_to_csv, reports_to_json
from app.models.schemas import AttackMethod, AttackSpec, DefenseSpec


def pairwise_auc(scores, labels) -> float:
    positives = scores[labels == 1]
    negatives = scores[labels == 0]
    wins = (positives[:, None] > negatives[None, :]).sum() + 0.5 * (positives[:, None] == negatives[None, :]).sum()
    return wins / (positives.size * negatives.size)


# =============================================================================
# AUC
# =============================================================================

class TestAUC:

    def test_textbook_example(self):
        assert auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == pytest.approx(0.75)

    def test_perfect_and_inverted(self):
        assert auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
        assert auc([0.9, 0.8, 0.2, 0.1], [0, 0, 1, 1]) == 0.0

    def test_ties_count_half(self):
        assert auc([0.5, 0.5], [0, 1]) == 0.5
        assert auc([0.3, 0.3, 0.3, 0.3], [0, 1, 0, 1]) == 0.5

    def test_single_class_is_undefined(self):
        with pytest.raises(UndefinedMetricError):
            auc([0.1, 0.2], [1, 1])

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            auc([0.1, 0.2, 0.3], [0, 1])

    @pytest.mark.parametrize("labels", [[0, 1, 2], [0, 1, -1], [0.5, 1, 0]])
    def test_non_binary_labels_rejected(self, labels):
        with pytest.raises(LabelError):
            auc([0.1, 0.2, 0.3], labels)

    def test_mean_auc_rejects_uncertain_labels(self):
        labels = np.array([[0, 1], [1, 2], [0, 0]])
        with pytest.raises(LabelError):
            mean_auc(np.zeros((3, 2)), labels)

    def test_matches_pairwise_count(self):
        draw = np.random.default_rng(21)
        for case in range(10_000):
            n = int(draw.integers(2, 13))
            labels = draw.integers(0, 2, size=n)
            labels[draw.permutation(n)[:2]] = [0, 1]
            # pocos valores distintos fuerzan empates; el resto son continuos
            if case % 2:
                scores = draw.integers(0, 4, size=n).astype(np.float64)
            else:
                scores = draw.normal(size=n)
            assert auc(scores, labels) == pairwise_auc(scores, labels), (scores, labels)


# =============================================================================
# AUC media
# =============================================================================

class TestMeanAUC:

    def test_mean_over_labels(self):
        logits = np.array([[0.1, 0.9], [0.4, 0.2], [0.35, 0.8], [0.8, 0.1]])
        labels = np.array([[0, 1], [0, 0], [1, 1], [1, 0]])
        scores = mean_auc(logits, labels, ["a", "b"])
        assert scores.per_label == [pytest.approx(0.75), 1.0]
        assert scores.mean == pytest.approx(0.875)
        assert scores.excluded == []

    def test_single_class_label_is_excluded(self):
        logits = np.array([[0.1, 0.3], [0.9, 0.2], [0.4, 0.7]])
        labels = np.array([[0, 1], [1, 1], [0, 1]])
        scores = mean_auc(logits, labels, ["a", "b"])
        assert scores.per_label == [1.0, None]
        assert scores.excluded == ["b"]
        assert scores.mean == 1.0
        assert scores.as_dict() == {"a": 1.0, "b": None}

    def test_all_labels_undefined(self):
        with pytest.raises(UndefinedMetricError):
            mean_auc(np.zeros((3, 2)), np.ones((3, 2)))

    def test_invariant_to_monotone_transforms(self, rng):
        logits = rng.normal(size=(30, 4))
        labels = rng.integers(0, 2, size=(30, 4))
        labels[0], labels[1] = 0, 1
        base = mean_auc(logits, labels).mean
        assert mean_auc(3.0 * logits + 1.0, labels).mean == pytest.approx(base)
        assert mean_auc(expit(logits), labels).mean == pytest.approx(base)

    def test_saturated_logits_keep_their_order(self):
        logits = np.array([[40.0], [50.0], [60.0], [70.0]])
        labels = np.array([[0], [0], [1], [1]])
        assert mean_auc(logits, labels).mean == 1.0

    def test_default_names(self):
        logits = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert mean_auc(logits, np.eye(2, dtype=int)).label_names == ["label_0", "label_1"]


# =============================================================================
# Distancia L2
# =============================================================================

class TestDistance:

    def test_three_four_five(self):
        assert l2_distance(np.zeros((1, 2)), np.array([[3.0, 4.0]])) == pytest.approx(5.0)

    def test_mean_over_examples(self):
        clean = np.zeros((2, 1, 1, 2))
        adv = np.array([[[[3.0, 4.0]]], [[[0.0, 3.0]]]])
        assert l2_distance(clean, adv) == pytest.approx(4.0)

    def test_identical_batches(self, rng):
        images = rng.random((3, 1, 4, 4))
        assert l2_distance(images, images) == 0.0

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            l2_distance(np.zeros((2, 3)), np.zeros((3, 2)))


# =============================================================================
# Reportes
# =============================================================================

def _report(**kwargs):
    logits = np.array([[0.1, 0.9], [0.4, 0.2], [0.35, 0.8], [0.8, 0.1]])
    labels = np.array([[0, 1], [0, 0], [1, 1], [1, 0]])
    defaults = dict(
        experiment="transfer_matrix",
        scores=mean_auc(logits, labels, ["Atelectasis", "Edema"]),
        n_examples=4,
        seed=17,
        setting="black_box",
        source="cnn_small",
        target="mlp",
        attack=AttackSpec(method=AttackMethod.DAA, epsilon=0.1, iterations=5, minibatch=8),
        mean_l2=1.25,
        wall_clock_seconds=3.5,
    )
    defaults.update(kwargs)
    return make_report(**defaults)


class TestReports:

    def test_json_excludes_wall_clock_by_default(self):
        payload = json.loads(report_to_json(_report()))
        assert "wall_clock_seconds" not in payload
        assert json.loads(report_to_json(_report(), include_timing=True))["wall_clock_seconds"] == 3.5

    def test_json_is_deterministic(self):
        assert reports_to_json([_report(), _report()]) == reports_to_json([_report(), _report(wall_clock_seconds=9.0)])

    def test_csv_echoes_spec_and_metrics(self):
        rows = list(csv.DictReader(io.StringIO(reports_to_csv([_report()]))))
        assert len(rows) == 1
        row = rows[0]
        assert row["method"] == "daa"
        assert row["epsilon"] == "0.1"
        assert row["alpha"] == repr(2.5 * 0.1 / 5)
        assert row["bandwidth_rule"] == "median"
        assert row["auc_Atelectasis"] == "0.75" and row["auc_Edema"] == "1.0"
        assert row["mean_l2"] == "1.25"
        assert row["lambda"] == ""

    def test_csv_header_order(self):
        header = reports_to_csv([_report()]).splitlines()[0].split(",")
        assert header[:len(SPEC_COLUMNS)] == SPEC_COLUMNS
        assert header[-2:] == ["auc_Atelectasis", "auc_Edema"]

    def test_defense_columns(self):
        report = _report(setting="defended", defense=DefenseSpec(lam=0.6), defense_mode="advtrain")
        row = next(csv.DictReader(io.StringIO(reports_to_csv([report]))))
        assert row["lambda"] == "0.6" and row["defense_mode"] == "advtrain"
        assert row["inner_method"] == "pgd"

    def test_excluded_labels_serialized(self):
        logits = np.array([[0.1, 0.3], [0.9, 0.2], [0.4, 0.7]])
        labels = np.array([[0, 1], [1, 1], [0, 1]])
        report = _report(scores=mean_auc(logits, labels, ["a", "b"]), n_examples=3)
        row = next(csv.DictReader(io.StringIO(reports_to_csv([report]))))
        assert row["excluded_labels"] == "b"
        assert row["auc_b"] == ""
