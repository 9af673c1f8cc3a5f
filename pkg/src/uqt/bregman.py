"""Bregman divergences assembled literally from a rule's generator.

``bregman_div`` is deliberately naive: it evaluates
``G(p) - G(q) - <G'(q), p - q>`` term by term and shares no code with the
closed forms in :mod:`uqt.scoring`, so the two can check each other.
"""

from __future__ import annotations

import numpy as np

from uqt.errors import ValidationError
from uqt.scoring import ScoringRule, generator, subgradient

FORWARD = "forward"
REVERSE = "reverse"


def bregman_div(rule: ScoringRule, p, q) -> np.ndarray:
    """``D_G(p || q)`` from ``G`` and ``G'``.

    Coordinates where ``p`` and ``q`` agree contribute nothing to the linear
    term even if ``G'(q)`` is infinite there.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape[-1] != q.shape[-1]:
        raise ValidationError(f"class counts differ: {p.shape[-1]} vs {q.shape[-1]}")
    diff = p - q
    grad = subgradient(rule, q)
    with np.errstate(invalid="ignore"):
        lin = np.where(diff == 0.0, 0.0, grad * diff)
    gp = generator(rule, p)
    gq = generator(rule, q)
    with np.errstate(invalid="ignore"):
        d = gp - gq - np.sum(lin, axis=-1)
    # an infinite linear term with finite generators is a genuine +inf
    return np.where(np.isnan(d), np.inf, d)


def expected_bregman_objective(rule: ScoringRule, z, members, direction: str = FORWARD) -> np.ndarray:
    """Uniform average of Bregman divergences between ``z`` and ensemble members.

    ``forward`` averages ``D(z || member)`` (minimized by the central
    prediction); ``reverse`` averages ``D(member || z)`` (minimized by the
    member mean).

    Parameters
    ----------
    z : array_like, shape (..., K)
    members : array_like, shape (..., M, K)
    """
    members = np.asarray(members, dtype=np.float64)
    if members.ndim < 2 or members.shape[-2] < 1:
        raise ValidationError("need at least one member")
    z = np.expand_dims(np.asarray(z, dtype=np.float64), -2)
    if direction == FORWARD:
        d = bregman_div(rule, z, members)
    elif direction == REVERSE:
        d = bregman_div(rule, members, z)
    else:
        raise ValidationError(f"direction must be 'forward' or 'reverse', got {direction!r}")
    return d.mean(axis=-1)
