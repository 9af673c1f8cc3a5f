"""Central label and central prediction of an ensemble.

The central label is the member mean, the minimizer of the expected
divergence from the members to a point. The central prediction minimizes
the expected divergence from a point to the members; it depends on the rule:

* log score: normalized geometric mean of the members;
* Brier score: the member mean;
* spherical score: a closed-form point on the affine hull of the simplex;
* zero-one score: undefined.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from uqt.errors import CentralPredictionUndefinedError, ValidationError
from uqt.scoring import ScoringRule
from uqt.simplex import ProbVector, clamp_log, member_mean


def _members(members) -> np.ndarray:
    m = np.asarray(members, dtype=np.float64)
    if m.ndim < 2 or m.shape[-2] < 1 or m.shape[-1] < 2:
        raise ValidationError(f"members must have shape (..., M >= 1, K >= 2), got {m.shape}")
    return m


@dataclass(frozen=True)
class CentralPrediction:
    """Result of :func:`central_prediction`.

    ``value`` is ``None`` when the rule has no central prediction. For the
    spherical score the value lies on the affine hull of the simplex and may
    have negative coordinates; ``outside_simplex`` flags that case.
    """

    rule: ScoringRule
    value: np.ndarray | None
    defined: bool = True
    outside_simplex: bool = False

    def as_prob_vector(self) -> ProbVector:
        if not self.defined:
            raise CentralPredictionUndefinedError(f"central prediction not defined for {self.rule.value}")
        return ProbVector(self.value)


def central_label(members) -> np.ndarray:
    """Arithmetic mean over the member axis (``-2``).

    Identical members give that member back bit for bit.
    """
    return member_mean(_members(members), axis=-2)


def log_central(members) -> np.ndarray:
    m = _members(members)
    mean_log = clamp_log(m).mean(axis=-2)
    top = np.max(mean_log, axis=-1, keepdims=True)
    if np.any(np.isneginf(top)):
        raise CentralPredictionUndefinedError(
            "log-central undefined: no class has positive probability under every member"
        )
    g = np.exp(mean_log - top)
    return g / g.sum(axis=-1, keepdims=True)


def spherical_central(members) -> np.ndarray:
    m = _members(members)
    K = m.shape[-1]
    unit = m / np.linalg.norm(m, axis=-1, keepdims=True)
    eta_e = unit.mean(axis=-2)
    x0 = np.full(K, 1.0 / K)
    x0_norm = np.sqrt(K) / K
    n = x0 / x0_norm
    # component of eta_e orthogonal to the all-ones direction
    proj = np.sum(eta_e * x0, axis=-1, keepdims=True) / (x0_norm * x0_norm)
    m_perp = eta_e - proj * x0
    m_sq = np.sum(m_perp * m_perp, axis=-1, keepdims=True)
    if np.any(m_sq >= 1.0):
        raise CentralPredictionUndefinedError("spherical-central undefined: |m| >= 1")
    return x0_norm * (n + m_perp / np.sqrt(1.0 - m_sq))


def central_prediction_array(rule: ScoringRule, members) -> np.ndarray:
    """Central prediction as a bare array of shape ``(..., K)``.

    Raises
    ------
    CentralPredictionUndefinedError
        For the zero-one rule and for degenerate log/spherical ensembles.
    """
    if rule is ScoringRule.LOG:
        return log_central(members)
    if rule is ScoringRule.BRIER:
        return central_label(members)
    if rule is ScoringRule.SPHERICAL:
        return spherical_central(members)
    if rule is ScoringRule.ZERO_ONE:
        raise CentralPredictionUndefinedError("central prediction Not defined for the zero-one score")
    raise CentralPredictionUndefinedError(f"no closed-form central prediction for {rule.value}")


def central_prediction(rule: ScoringRule, members) -> CentralPrediction:
    if rule is ScoringRule.ZERO_ONE:
        return CentralPrediction(rule, None, defined=False)
    value = central_prediction_array(rule, members)
    return CentralPrediction(rule, value, outside_simplex=bool(np.any(value < 0)))
