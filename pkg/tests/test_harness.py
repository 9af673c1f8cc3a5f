import numpy as np
import pytest

from uqt.errors import DegenerateLabelsError, ValidationError
from uqt.estimators import MeasureSpec
from uqt.harness import (
    LabeledScores,
    auroc,
    infinite_ties,
    misclassification_detect,
    ood_detect,
    predicted_labels,
    score_samples,
    worker_count,
)
from uqt.io import read_ensemble, read_labels
from uqt.scoring import ScoringRule
from uqt.simplex import EnsemblePredictions

from conftest import FIXTURES, random_simplex
from oracles import pairwise_auroc


def labeled(pos, neg):
    return np.concatenate([pos, neg]), np.r_[np.ones(len(pos), bool), np.zeros(len(neg), bool)]


class TestAuroc:
    @pytest.mark.parametrize("pos,neg,expected", [([0.3, 0.4], [0.1, 0.2], 1.0), ([0.8, 0.5], [0.5, 0.2], 0.875),
                                                  ([0.1, 0.5, 0.5], [0.5, 0.1, 0.5], 0.5)])
    def test_hand(self, pos, neg, expected):
        assert auroc(*labeled(pos, neg)) == expected

    def test_brute_force_with_ties(self, rng):
        for _ in range(300):
            n_pos, n_neg = rng.integers(1, 15, 2)
            pos = rng.integers(0, 4, n_pos).astype(float)
            neg = rng.integers(0, 4, n_neg).astype(float)
            assert auroc(*labeled(pos, neg)) == pairwise_auroc(pos, neg)

    def test_infinities(self):
        s, y = labeled([np.inf, np.inf, 1.0], [np.inf, 0.0])
        assert auroc(s, y) == pairwise_auroc([np.inf, np.inf, 1.0], [np.inf, 0.0])
        assert infinite_ties(LabeledScores(s, y)) == 2

    def test_monotone_transform(self, rng):
        s, y = rng.normal(size=200), rng.random(200) < 0.4
        assert auroc(s, y) == auroc(np.exp(3 * s) + 1, y)

    def test_swap(self, rng):
        s, y = rng.integers(0, 5, 100).astype(float), rng.random(100) < 0.5
        assert auroc(s, ~y) == pytest.approx(1 - auroc(s, y), abs=1e-15)

    def test_one_class(self):
        with pytest.raises(DegenerateLabelsError):
            auroc([0.1, 0.2], [True, True])

    def test_nan(self):
        with pytest.raises(ValidationError):
            auroc([np.nan, 0.2], [True, False])


class TestScoreSamples:
    def test_identical_members(self):
        e = EnsemblePredictions([[[0.3, 0.7]]] * 4)
        assert score_samples(e, MeasureSpec.parse("exc11")).scores[0] == 0.0

    def test_hand(self, hand_members):
        e = EnsemblePredictions(hand_members[:, None, :])
        assert score_samples(e, MeasureSpec.parse("bayes2")).scores[0] == pytest.approx(0.610864, abs=1e-6)

    def test_member_permutation(self, rng):
        v = random_simplex(rng, (6, 50), 4)
        spec = MeasureSpec.parse("exc31", ScoringRule.SPHERICAL)
        a = score_samples(EnsemblePredictions(v), spec).scores
        b = score_samples(EnsemblePredictions(v[rng.permutation(6)]), spec).scores
        np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-16)

    @pytest.mark.parametrize("name", ["exc11", "tot13", "energy-diff"])
    def test_workers_bitwise(self, name, rng):
        e = EnsemblePredictions(random_simplex(rng, (4, 5000), 3))
        spec = MeasureSpec.parse(name)
        one = score_samples(e, spec, workers=1).scores
        many = score_samples(e, spec, workers=4).scores
        assert one.tobytes() == many.tobytes()

    def test_worker_env(self, monkeypatch):
        monkeypatch.setenv("UQT_THREADS", "3")
        assert worker_count() == 3
        monkeypatch.setenv("UQT_THREADS", "x")
        with pytest.raises(ValidationError):
            worker_count()


class TestDetection:
    def test_ood_perfect(self):
        calm = EnsemblePredictions([[[0.5, 0.5]] * 3] * 2)
        wild = EnsemblePredictions([[[0.9, 0.1]] * 3, [[0.1, 0.9]] * 3])
        assert ood_detect(calm, wild, MeasureSpec.parse("exc12")).auroc == 1.0

    def test_ood_same_data(self, rng):
        e = EnsemblePredictions(random_simplex(rng, (3, 40), 3))
        report = ood_detect(e, e, MeasureSpec.parse("tot11"))
        assert report.auroc == 0.5 and report.n_pos == report.n_neg == 40

    def test_ood_mismatch(self):
        with pytest.raises(ValidationError):
            ood_detect(EnsemblePredictions([[[0.5, 0.5]]]), EnsemblePredictions([[[0.2, 0.3, 0.5]]]),
                       MeasureSpec.parse("exc11"))

    def test_all_correct_rejected(self):
        e = EnsemblePredictions([[[0.9, 0.1], [0.2, 0.8]]])
        with pytest.raises(DegenerateLabelsError):
            misclassification_detect(e, [0, 1], MeasureSpec.parse("bayes1"))

    def test_constructed_perfect(self):
        v = np.array([[[0.95, 0.05], [0.1, 0.9], [0.6, 0.4], [0.8, 0.2]]])
        report = misclassification_detect(EnsemblePredictions(v), [0, 1, 1, 0], MeasureSpec.parse("bayes1"))
        assert report.auroc == 1.0 and report.n_pos == 1

    def test_predictions_tie_to_lowest(self):
        np.testing.assert_array_equal(predicted_labels(EnsemblePredictions([[[0.5, 0.5]]])), [0])

    @pytest.mark.parametrize("labels", [[0, 2], [0]])
    def test_bad_labels(self, labels):
        with pytest.raises(ValidationError):
            misclassification_detect(EnsemblePredictions([[[0.5, 0.5], [0.5, 0.5]]]), labels, MeasureSpec.parse("exc11"))

    def test_report_row(self):
        e = EnsemblePredictions([[[0.9, 0.1], [0.2, 0.8]]])
        row = ood_detect(e, EnsemblePredictions([[[0.5, 0.5]]]), MeasureSpec.parse("bayes2")).row()
        assert row["measure"] == "bayes2" and row["j"] == "" and row["auroc"] == "1.0"


class TestFixtures:
    def test_ood(self):
        report = ood_detect(read_ensemble(FIXTURES / "ood_in.uqt"), read_ensemble(FIXTURES / "ood_out.uqt"),
                            MeasureSpec.parse("exc12"))
        assert report.auroc > 0.85

    def test_label_noise(self):
        e, y = read_ensemble(FIXTURES / "noisy.uqt"), read_labels(FIXTURES / "noisy_labels.csv")
        tot = misclassification_detect(e, y, MeasureSpec.parse("tot11")).auroc
        exc = misclassification_detect(e, y, MeasureSpec.parse("exc11")).auroc
        assert tot >= exc
