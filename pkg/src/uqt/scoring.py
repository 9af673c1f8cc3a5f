"""Strictly proper scoring rules for categorical predictions.

Each rule is generated by a convex function ``G`` on the simplex. From ``G``
and its subgradient ``G'`` follow the loss

    loss(p, y) = <G'(p), p> - G'_y(p) - G(p)

and the three pointwise risks: Bayes risk ``-G(eta)``, total risk
``<G'(q), q> - G(q) - <G'(q), eta>`` and excess risk, the Bregman divergence
``D_G(eta || q)``. The functions here evaluate the closed forms per rule;
:mod:`uqt.bregman` rebuilds the divergence literally from ``G`` and ``G'``.

Every function works on arrays whose last axis indexes classes and
broadcasts over leading axes. Boundary values follow ``0 log 0 = 0`` and may
be infinite.
"""

from __future__ import annotations

from enum import Enum

import numpy as np
from scipy.special import rel_entr, xlogy

from uqt.errors import ValidationError
from uqt.simplex import argmax_lowest, clamp_log


class ScoringRule(Enum):
    LOG = "log"
    BRIER = "brier"
    ZERO_ONE = "zero-one"
    SPHERICAL = "spherical"
    NEG_LOG = "neg-log"

    @classmethod
    def parse(cls, name) -> "ScoringRule":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("_", "-")
        aliases = {"zeroone": "zero-one", "neglog": "neg-log", "logscore": "log"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ValidationError(f"unknown scoring rule {name!r}") from None

    @property
    def strictly_convex(self) -> bool:
        return self is not ScoringRule.ZERO_ONE


# Rules offered when the caller does not pick one. The negative log score is
# only defined on the open simplex and must be requested explicitly.
DEFAULT_RULES = (ScoringRule.LOG, ScoringRule.BRIER, ScoringRule.SPHERICAL, ScoringRule.ZERO_ONE)


def _arr(p) -> np.ndarray:
    return np.asarray(p, dtype=np.float64)


def _norm(p) -> np.ndarray:
    return np.sqrt(np.sum(p * p, axis=-1))


def _at(p, idx) -> np.ndarray:
    return np.take_along_axis(p, np.expand_dims(idx, -1), axis=-1)[..., 0]


def _check_pair(eta, eta_hat):
    if eta.shape[-1] != eta_hat.shape[-1]:
        raise ValidationError(f"class counts differ: {eta.shape[-1]} vs {eta_hat.shape[-1]}")


def generator(rule: ScoringRule, p) -> np.ndarray:
    """Convex generator ``G(p)``."""
    p = _arr(p)
    if rule is ScoringRule.LOG:
        return np.sum(xlogy(p, p), axis=-1)
    if rule is ScoringRule.BRIER:
        return -np.sum(p * (1.0 - p), axis=-1)
    if rule is ScoringRule.ZERO_ONE:
        return np.max(p, axis=-1) - 1.0
    if rule is ScoringRule.SPHERICAL:
        return _norm(p) - 1.0
    if rule is ScoringRule.NEG_LOG:
        return -np.sum(clamp_log(p), axis=-1)
    raise ValidationError(f"unsupported rule {rule!r}")


def subgradient(rule: ScoringRule, p) -> np.ndarray:
    """Elementwise subgradient ``G'(p)``, same shape as ``p``.

    The zero-one rule uses the indicator of the lowest-index argmax.
    """
    p = _arr(p)
    if rule is ScoringRule.LOG:
        return 1.0 + clamp_log(p)
    if rule is ScoringRule.BRIER:
        return 2.0 * p - 1.0
    if rule is ScoringRule.ZERO_ONE:
        k = argmax_lowest(p)
        return (np.arange(p.shape[-1]) == k[..., None]).astype(np.float64)
    if rule is ScoringRule.SPHERICAL:
        return p / _norm(p)[..., None]
    if rule is ScoringRule.NEG_LOG:
        with np.errstate(divide="ignore"):
            return -1.0 / p
    raise ValidationError(f"unsupported rule {rule!r}")


def loss_constant(rule: ScoringRule, K: int) -> float:
    """Additive constant dropped from the simplified loss of ``rule``.

    ``<G'(p), p> - G'_y(p) - G(p) == loss(rule, p, y) + loss_constant(rule, K)``.
    """
    if rule is ScoringRule.BRIER:
        return 1.0
    if rule is ScoringRule.NEG_LOG:
        return -float(K)
    return 0.0


def loss(rule: ScoringRule, p, y) -> np.ndarray:
    """Simplified loss of predicting ``p`` when class ``y`` materializes.

    Brier and negative-log losses omit the constants given by
    :func:`loss_constant`; they do not affect which prediction is optimal.
    """
    p = _arr(p)
    y = np.asarray(y)
    K = p.shape[-1]
    if np.any((y < 0) | (y >= K)):
        raise ValidationError(f"class index out of range for K={K}")
    y = np.broadcast_to(y, p.shape[:-1])
    py = _at(p, y)
    if rule is ScoringRule.LOG:
        return -clamp_log(py)
    if rule is ScoringRule.BRIER:
        return np.sum(p * p, axis=-1) - 2.0 * py
    if rule is ScoringRule.ZERO_ONE:
        return (y != argmax_lowest(p)).astype(np.float64)
    if rule is ScoringRule.SPHERICAL:
        return 1.0 - py / _norm(p)
    if rule is ScoringRule.NEG_LOG:
        with np.errstate(divide="ignore"):
            return 1.0 / py + np.sum(clamp_log(p), axis=-1)
    raise ValidationError(f"unsupported rule {rule!r}")


def bayes_risk(rule: ScoringRule, eta) -> np.ndarray:
    """Bayes risk ``-G(eta)``: entropy, Gini impurity, 1 - max, 1 - norm."""
    p = _arr(eta)
    if rule is ScoringRule.LOG:
        return -np.sum(xlogy(p, p), axis=-1)
    if rule is ScoringRule.BRIER:
        return 1.0 - np.sum(p * p, axis=-1)
    if rule is ScoringRule.ZERO_ONE:
        return 1.0 - np.max(p, axis=-1)
    if rule is ScoringRule.SPHERICAL:
        return 1.0 - _norm(p)
    if rule is ScoringRule.NEG_LOG:
        return np.sum(clamp_log(p), axis=-1)
    raise ValidationError(f"unsupported rule {rule!r}")


def _spherical_cosine(eta, eta_hat):
    c = np.sum(eta * eta_hat, axis=-1) / (_norm(eta) * _norm(eta_hat))
    return np.clip(c, -1.0, 1.0)


def total_risk(rule: ScoringRule, eta, eta_hat) -> np.ndarray:
    """Expected loss of predicting ``eta_hat`` when labels follow ``eta``."""
    eta, eta_hat = _arr(eta), _arr(eta_hat)
    _check_pair(eta, eta_hat)
    if rule is ScoringRule.LOG:
        return -np.sum(xlogy(eta, eta_hat), axis=-1)
    if rule is ScoringRule.BRIER:
        d = eta - eta_hat
        return np.sum(d * d, axis=-1) - np.sum(eta * eta, axis=-1) + 1.0
    if rule is ScoringRule.ZERO_ONE:
        eta, eta_hat = np.broadcast_arrays(eta, eta_hat)
        return 1.0 - _at(eta, argmax_lowest(eta_hat))
    if rule is ScoringRule.SPHERICAL:
        return 1.0 - _norm(eta) * _spherical_cosine(eta, eta_hat)
    if rule is ScoringRule.NEG_LOG:
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = eta / eta_hat + clamp_log(eta_hat) - 1.0
        terms = np.where(np.isnan(terms), np.inf, terms)
        return np.sum(terms, axis=-1)
    raise ValidationError(f"unsupported rule {rule!r}")


def excess_risk(rule: ScoringRule, eta, eta_hat) -> np.ndarray:
    """Excess risk ``D_G(eta || eta_hat)`` in closed form.

    KL divergence for the log score, squared Euclidean distance for Brier,
    ``max eta - eta[argmax eta_hat]`` for zero-one, a cosine gap for the
    spherical score and the Itakura-Saito divergence for the negative log
    score.
    """
    eta, eta_hat = _arr(eta), _arr(eta_hat)
    _check_pair(eta, eta_hat)
    if rule is ScoringRule.LOG:
        return np.sum(rel_entr(eta, eta_hat), axis=-1)
    if rule is ScoringRule.BRIER:
        d = eta - eta_hat
        return np.sum(d * d, axis=-1)
    if rule is ScoringRule.ZERO_ONE:
        eta, eta_hat = np.broadcast_arrays(eta, eta_hat)
        return np.max(eta, axis=-1) - _at(eta, argmax_lowest(eta_hat))
    if rule is ScoringRule.SPHERICAL:
        return _norm(eta) * (1.0 - _spherical_cosine(eta, eta_hat))
    if rule is ScoringRule.NEG_LOG:
        with np.errstate(divide="ignore", invalid="ignore"):
            r = eta / eta_hat
            terms = r - clamp_log(r) - 1.0
        # 0/0 cannot occur on the open simplex; a zero in eta_hat is +inf
        terms = np.where(np.isnan(terms), np.inf, terms)
        return np.sum(terms, axis=-1)
    raise ValidationError(f"unsupported rule {rule!r}")
