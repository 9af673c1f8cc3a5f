"""Probability vectors, logits and ensembles of categorical predictions.

All containers are immutable: their arrays are copied on construction and
marked read-only. Exact zeros are kept as zeros; nothing is floored.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from uqt.errors import ValidationError

SUM_TOLERANCE = 1e-6
# Vectors whose sum is already this close to 1 are kept bit-for-bit, which
# makes renormalization idempotent and file round trips exact.
EXACT_TOLERANCE = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


def normalize_probs(values, axis: int = -1) -> np.ndarray:
    """Validate and renormalize probability vectors along ``axis``.

    Entries must be finite and non-negative and every vector must sum to 1
    within ``SUM_TOLERANCE``; vectors are then divided by their sum unless
    they already sum to 1 within round-off.
    """
    p = np.asarray(values, dtype=np.float64)
    if p.ndim == 0 or p.shape[axis] < 2:
        raise ValidationError(f"need at least 2 classes, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValidationError("probabilities must be finite")
    if np.any(p < 0):
        raise ValidationError("probabilities must be non-negative")
    s = p.sum(axis=axis, keepdims=True)
    if np.any(np.abs(s - 1.0) > SUM_TOLERANCE):
        worst = float(np.max(np.abs(s - 1.0)))
        raise ValidationError(f"probabilities do not sum to 1 (max deviation {worst:.3g})")
    return np.where(np.abs(s - 1.0) > EXACT_TOLERANCE, p / s, p)


@dataclass(frozen=True, eq=False)
class ProbVector:
    """A point on the probability simplex over K >= 2 classes."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 1:
            raise ValidationError("ProbVector must be one-dimensional")
        object.__setattr__(self, "probs", _frozen(normalize_probs(p)))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.probs, dtype=dtype)

    def __len__(self):
        return self.probs.shape[0]

    def __eq__(self, other):
        if not isinstance(other, ProbVector):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash(self.probs.tobytes())

    def __repr__(self):
        return f"ProbVector({np.array2string(self.probs, precision=6)})"

    @property
    def K(self) -> int:
        return self.probs.shape[0]


@dataclass(frozen=True, eq=False)
class LogitVector:
    logits: np.ndarray
    temperature: float = 1.0

    def __post_init__(self):
        l = np.asarray(self.logits, dtype=np.float64)
        if l.ndim != 1 or l.shape[0] < 2:
            raise ValidationError("LogitVector needs a 1-D array of at least 2 logits")
        if not np.all(np.isfinite(l)):
            raise ValidationError("logits must be finite")
        if not (self.temperature > 0 and np.isfinite(self.temperature)):
            raise ValidationError("temperature must be positive")
        object.__setattr__(self, "logits", _frozen(l))
        object.__setattr__(self, "temperature", float(self.temperature))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.logits, dtype=dtype)

    def __len__(self):
        return self.logits.shape[0]


def softmax(logits, temperature: float | None = None) -> np.ndarray:
    """Tempered softmax along the last axis.

    ``logits`` may be a :class:`LogitVector` (its temperature is used unless
    one is given explicitly) or an array of shape ``(..., K)``. Entries equal
    to ``-inf`` are allowed and map to probability zero.
    """
    if isinstance(logits, LogitVector):
        t = logits.temperature if temperature is None else temperature
        l = logits.logits
    else:
        t = 1.0 if temperature is None else temperature
        l = np.asarray(logits, dtype=np.float64)
    if not t > 0:
        raise ValidationError("temperature must be positive")
    z = l / t
    z = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def clamp_log(p) -> np.ndarray:
    """Elementwise natural log with ``log 0 = -inf`` and no warnings.

    Callers are responsible for the ``0 * log 0 = 0`` convention.
    """
    p = np.asarray(p, dtype=np.float64)
    with np.errstate(divide="ignore"):
        return np.log(p)


def member_mean(values, axis: int = -2) -> np.ndarray:
    """Mean along ``axis`` taken as offsets from the first entry, so that
    identical entries average to themselves bit for bit."""
    v = np.moveaxis(np.asarray(values, dtype=np.float64), axis, -1)
    first = v[..., :1]
    return (first + (v - first).mean(axis=-1, keepdims=True))[..., 0]


def argmax_lowest(p, axis: int = -1) -> np.ndarray:
    # np.argmax already returns the first maximal index
    return np.argmax(np.asarray(p), axis=axis)


class PredictionKind(Enum):
    PROBABILITIES = 0
    LOGITS = 1


@dataclass(frozen=True, eq=False)
class EnsemblePredictions:
    """Predictions of ``M`` ensemble members on ``N`` samples over ``K`` classes.

    ``values`` has shape ``(M, N, K)`` and holds either probabilities or
    logits, as indicated by ``kind``. Probability slices are renormalized on
    construction.
    """

    values: np.ndarray
    kind: PredictionKind = PredictionKind.PROBABILITIES
    temperature: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 3:
            raise ValidationError(f"ensemble values must be 3-D (M, N, K), got shape {v.shape}")
        M, N, K = v.shape
        if M < 1 or N < 1 or K < 2:
            raise ValidationError(f"need M >= 1, N >= 1, K >= 2; got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("ensemble values must be finite")
        kind = PredictionKind(self.kind) if not isinstance(self.kind, PredictionKind) else self.kind
        if kind is PredictionKind.PROBABILITIES:
            v = normalize_probs(v)
        if not (self.temperature > 0 and np.isfinite(self.temperature)):
            raise ValidationError("temperature must be positive")
        object.__setattr__(self, "values", _frozen(v))
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "temperature", float(self.temperature))

    @property
    def M(self) -> int:
        return self.values.shape[0]

    @property
    def N(self) -> int:
        return self.values.shape[1]

    @property
    def K(self) -> int:
        return self.values.shape[2]

    def with_temperature(self, temperature: float) -> "EnsemblePredictions":
        return EnsemblePredictions(self.values, self.kind, temperature)

    def probabilities(self) -> np.ndarray:
        """Member probabilities, shape ``(M, N, K)``."""
        if self.kind is PredictionKind.PROBABILITIES:
            return self.values
        return softmax(self.values, self.temperature)

    def logits(self) -> tuple[np.ndarray, float]:
        """Logits and the temperature to use with them.

        Probability ensembles are mapped to ``log p`` with temperature 1, so
        that ``softmax(log p) == p``; zero probabilities become ``-inf``.
        """
        if self.kind is PredictionKind.LOGITS:
            return self.values, self.temperature
        return clamp_log(self.values), 1.0

    def by_sample(self) -> np.ndarray:
        """Probabilities rearranged to ``(N, M, K)``: one member stack per sample."""
        return np.ascontiguousarray(np.swapaxes(self.probabilities(), 0, 1))

    def members(self, sample: int) -> np.ndarray:
        if not 0 <= sample < self.N:
            raise ValidationError(f"sample index {sample} out of range [0, {self.N})")
        return self.probabilities()[:, sample, :]


def mean_prob(e: EnsemblePredictions, sample: int) -> ProbVector:
    """Arithmetic mean of the member predictions for one sample."""
    return ProbVector(member_mean(e.members(sample), axis=0))
