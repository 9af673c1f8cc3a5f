"""Free energy of logits and its link to MRBI under the log score.

For tempered logits the gap between the energy of the mean logit and the
mean member energy, divided by the temperature, equals the log-score MRBI
of the softmaxed members. The log-score EPBD (expected pairwise KL) equals
the sum over classes of the member covariance between probability and
tempered logit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from uqt.errors import ValidationError
from uqt.estimators import excess_variant
from uqt.scoring import ScoringRule
from uqt.simplex import LogitVector, member_mean, softmax


def _logit_stack(logit_members, temperature):
    if isinstance(logit_members, (list, tuple)) and logit_members and isinstance(logit_members[0], LogitVector):
        temps = {l.temperature for l in logit_members}
        if len(temps) != 1:
            raise ValidationError("all members must share one temperature")
        t = temps.pop() if temperature is None else temperature
        return np.stack([l.logits for l in logit_members]), t
    l = np.asarray(logit_members, dtype=np.float64)
    if l.ndim < 2 or l.shape[-2] < 1 or l.shape[-1] < 2:
        raise ValidationError(f"logit members must have shape (..., M, K), got {l.shape}")
    return l, 1.0 if temperature is None else float(temperature)


def free_energy(logits, temperature: float | None = None) -> np.ndarray:
    """``-T * logsumexp(logits / T)`` along the last axis."""
    if isinstance(logits, LogitVector):
        t = logits.temperature if temperature is None else temperature
        logits = logits.logits
    else:
        t = 1.0 if temperature is None else temperature
    if not t > 0:
        raise ValidationError("temperature must be positive")
    return -t * logsumexp(np.asarray(logits, dtype=np.float64) / t, axis=-1)


@dataclass(frozen=True)
class EnergyScores:
    energy_of_mean_logit: np.ndarray
    mean_energy: np.ndarray
    temperature: float

    @property
    def difference(self) -> np.ndarray:
        """``(energy_of_mean_logit - mean_energy) / T``; equals log-score MRBI."""
        return (self.energy_of_mean_logit - self.mean_energy) / self.temperature


def energy_pair(logit_members, temperature: float | None = None) -> EnergyScores:
    """Energy of the member-mean logit and the mean member energy.

    ``logit_members`` is a list of :class:`LogitVector` or an array of shape
    ``(..., M, K)``.
    """
    l, t = _logit_stack(logit_members, temperature)
    return EnergyScores(
        energy_of_mean_logit=free_energy(member_mean(l, axis=-2), t),
        mean_energy=member_mean(free_energy(l, t), axis=-1),
        temperature=t,
    )


def class_covariance_sum(logit_members, temperature: float | None = None) -> np.ndarray:
    """Sum over classes of the population covariance between member
    probability and tempered logit."""
    l, t = _logit_stack(logit_members, temperature)
    p = softmax(l, t)
    f = l / t
    cov = ((p - p.mean(axis=-2, keepdims=True)) * (f - f.mean(axis=-2, keepdims=True))).mean(axis=-2)
    return cov.sum(axis=-1)


def covariance_identity_check(logit_members, temperature: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Residuals ``|EPKL - sum of covariances|`` and ``|MBI + MRBI - EPKL|``."""
    l, t = _logit_stack(logit_members, temperature)
    p = softmax(l, t)
    epkl = excess_variant(ScoringRule.LOG, p, 1, 1)
    mbi = excess_variant(ScoringRule.LOG, p, 1, 3)
    mrbi = excess_variant(ScoringRule.LOG, p, 3, 1)
    return np.abs(epkl - class_covariance_sum(l, t)), np.abs(mbi + mrbi - epkl)
