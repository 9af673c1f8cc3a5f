"""Scoring ensembles sample by sample and evaluating detection with AUROC."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from uqt.central import central_label
from uqt.energy import energy_pair
from uqt.errors import DegenerateLabelsError, InvariantViolation, ValidationError
from uqt.estimators import MeasureResult, MeasureSpec, Risk, evaluate
from uqt.simplex import EnsemblePredictions, argmax_lowest

# Samples are scored in fixed-size chunks so the result never depends on the
# number of workers.
CHUNK = 2048

REPORT_FIELDS = ("measure", "rule", "i", "j", "auroc", "n_pos", "n_neg", "indeterminate")


def worker_count(requested: int | None = None) -> int:
    """Worker threads to use: ``requested`` if given, else ``UQT_THREADS``
    (0 or unset means one per CPU)."""
    if requested is None:
        raw = os.environ.get("UQT_THREADS", "0").strip() or "0"
        try:
            requested = int(raw)
        except ValueError:
            raise ValidationError(f"UQT_THREADS must be an integer, got {raw!r}") from None
    if requested < 0:
        raise ValidationError("worker count must be non-negative")
    return requested or (os.cpu_count() or 1)


@dataclass(frozen=True)
class LabeledScores:
    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=np.float64).ravel()
        y = np.asarray(self.labels).ravel().astype(bool)
        if s.shape != y.shape:
            raise ValidationError(f"{s.size} scores but {y.size} labels")
        if np.any(np.isnan(s)):
            raise ValidationError("scores contain NaN")
        n_pos = int(y.sum())
        if n_pos == 0 or n_pos == y.size:
            raise DegenerateLabelsError("AUROC needs at least one positive and one negative")
        object.__setattr__(self, "scores", s)
        object.__setattr__(self, "labels", y)

    @property
    def n_pos(self) -> int:
        return int(self.labels.sum())

    @property
    def n_neg(self) -> int:
        return int(self.labels.size - self.labels.sum())


def auroc(scores, labels=None) -> float:
    """Probability that a random positive outscores a random negative.

    Ties, including ``inf`` against ``inf``, count one half. Computed from
    average ranks (Mann-Whitney U) in ``O(n log n)``.
    """
    ls = scores if isinstance(scores, LabeledScores) else LabeledScores(scores, labels)
    ranks = rankdata(ls.scores, method="average")
    n_pos, n_neg = ls.n_pos, ls.n_neg
    u = ranks[ls.labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def infinite_ties(ls: LabeledScores) -> int:
    """Positive-negative pairs whose scores are equal infinities."""
    pos, neg = ls.scores[ls.labels], ls.scores[~ls.labels]
    count = 0
    for v in (np.inf, -np.inf):
        count += int(np.count_nonzero(pos == v)) * int(np.count_nonzero(neg == v))
    return count


@dataclass(frozen=True)
class DetectionReport:
    measure: MeasureSpec
    auroc: float
    n_pos: int
    n_neg: int
    indeterminate: int

    def __post_init__(self):
        if not 0.0 <= self.auroc <= 1.0:
            raise InvariantViolation(f"AUROC {self.auroc} outside [0, 1]")

    def row(self) -> dict:
        spec = self.measure
        return {
            "measure": spec.name,
            "rule": spec.rule.value,
            "i": "" if spec.i is None else spec.i,
            "j": "" if spec.j is None else spec.j,
            "auroc": repr(self.auroc),
            "n_pos": self.n_pos,
            "n_neg": self.n_neg,
            "indeterminate": self.indeterminate,
        }


def _energy_scores(e: EnsemblePredictions, kind: str, lo: int, hi: int) -> np.ndarray:
    logits, t = e.logits()
    chunk = np.swapaxes(logits[:, lo:hi, :], 0, 1)
    pair = energy_pair(chunk, t)
    if kind == "energy-of-mean":
        return pair.energy_of_mean_logit
    if kind == "mean-energy":
        return pair.mean_energy
    return pair.difference


def score_samples(e: EnsemblePredictions, spec: MeasureSpec, workers: int | None = None) -> MeasureResult:
    """Apply ``spec`` to every sample of the ensemble.

    Samples are independent; chunks may run on several threads and are
    reassembled in order.
    """
    n = e.N
    bounds = [(lo, min(lo + CHUNK, n)) for lo in range(0, n, CHUNK)]
    if spec.risk is Risk.ENERGY:
        def run(b):
            return _energy_scores(e, spec.energy, *b)
    else:
        stacks = e.by_sample()

        def run(b):
            return evaluate(spec, stacks[b[0]:b[1]])

    nw = min(worker_count(workers), len(bounds))
    if nw > 1:
        with ThreadPoolExecutor(max_workers=nw) as pool:
            parts = list(pool.map(run, bounds))
    else:
        parts = [run(b) for b in bounds]
    return MeasureResult(spec, np.concatenate(parts))


def _report(spec: MeasureSpec, scores, positives) -> DetectionReport:
    ls = LabeledScores(scores, positives)
    return DetectionReport(spec, auroc(ls), ls.n_pos, ls.n_neg, infinite_ties(ls))


def ood_detect(in_dist: EnsemblePredictions, out_dist: EnsemblePredictions, spec: MeasureSpec,
               workers: int | None = None) -> DetectionReport:
    """AUROC for telling out-of-distribution samples (positives) from
    in-distribution ones, higher score meaning more likely OOD."""
    if in_dist.K != out_dist.K:
        raise ValidationError(f"class counts differ: {in_dist.K} vs {out_dist.K}")
    if in_dist.kind is not out_dist.kind:
        raise ValidationError("in- and out-of-distribution files hold different kinds of values")
    s_in = score_samples(in_dist, spec, workers).scores
    s_out = score_samples(out_dist, spec, workers).scores
    labels = np.concatenate([np.zeros(s_in.size, bool), np.ones(s_out.size, bool)])
    return _report(spec, np.concatenate([s_in, s_out]), labels)


def predicted_labels(e: EnsemblePredictions) -> np.ndarray:
    """Argmax of the member mean per sample, ties to the lowest class."""
    return argmax_lowest(central_label(np.swapaxes(e.probabilities(), 0, 1)))


def misclassification_detect(e: EnsemblePredictions, labels, spec: MeasureSpec,
                             workers: int | None = None) -> DetectionReport:
    """AUROC for telling misclassified samples (positives) from correct ones."""
    y = np.asarray(labels)
    if y.shape != (e.N,):
        raise ValidationError(f"expected {e.N} labels, got shape {y.shape}")
    if not np.issubdtype(y.dtype, np.integer):
        if not np.all(np.equal(np.mod(y, 1), 0)):
            raise ValidationError("labels must be integer class indices")
        y = y.astype(np.int64)
    if np.any((y < 0) | (y >= e.K)):
        raise ValidationError(f"labels must lie in [0, {e.K})")
    wrong = predicted_labels(e) != y
    if not wrong.any() or wrong.all():
        state = "correct" if not wrong.any() else "wrong"
        raise DegenerateLabelsError(f"every sample is {state}; misclassification AUROC undefined")
    scores = score_samples(e, spec, workers).scores
    return _report(spec, scores, wrong)
