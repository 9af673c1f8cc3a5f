"""Bayesian approximations of Bayes, excess and total risk from an ensemble.

Every risk takes the unknown true conditional ``eta`` and, for excess and
total risk, a prediction ``eta_hat``. Each argument is replaced by one of
three ensemble-based approximations, addressed by a positional index:

1. average the risk over the members;
2. plug in the central label (member mean);
3. plug in the central prediction of the rule.

``excess_variant(rule, members, 1, 2)`` is thus the expectation over members
of ``D_G(member || mean)``: mutual information for the log score. Named
variants: (1,1) EPBD, (1,2) BI, (2,1) RBI, (1,3) MBI, (3,1) MRBI, (2,3) and
(3,2) bias terms; (2,2) and (3,3) vanish identically.

Members are equally weighted and arrays have shape ``(..., M, K)``; results
have shape ``(...)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from uqt.central import central_label, central_prediction_array
from uqt.errors import InvariantViolation, UndefinedMeasureError, ValidationError
from uqt.scoring import ScoringRule, bayes_risk, excess_risk, generator, subgradient, total_risk


class Risk(Enum):
    BAYES = "bayes"
    EXCESS = "exc"
    TOTAL = "tot"
    ENERGY = "energy"


ENERGY_KINDS = ("energy-of-mean", "mean-energy", "energy-diff")

NAMED_EXCESS = {
    (1, 1): "EPBD",
    (1, 2): "BI",
    (2, 1): "RBI",
    (1, 3): "MBI",
    (3, 1): "MRBI",
    (2, 3): "forward bias",
    (3, 2): "reverse bias",
}


def _needs_central(rule: ScoringRule) -> None:
    if rule in (ScoringRule.ZERO_ONE, ScoringRule.NEG_LOG):
        raise UndefinedMeasureError(
            f"central prediction Not defined for the {rule.value} score; "
            "index 3 approximations are unavailable"
        )


@dataclass(frozen=True)
class MeasureSpec:
    """Which uncertainty measure to compute.

    ``i`` approximates the true conditional, ``j`` the prediction. Bayes risk
    uses only ``i``; energy measures use neither and name their ``energy``
    kind instead.
    """

    risk: Risk
    rule: ScoringRule = ScoringRule.LOG
    i: int | None = None
    j: int | None = None
    energy: str | None = None

    def __post_init__(self):
        risk = Risk(self.risk)
        object.__setattr__(self, "risk", risk)
        object.__setattr__(self, "rule", ScoringRule.parse(self.rule))
        if risk is Risk.ENERGY:
            if self.energy not in ENERGY_KINDS or self.i is not None or self.j is not None:
                raise ValidationError(f"energy measure must be one of {ENERGY_KINDS}")
            return
        if self.i not in (1, 2, 3):
            raise ValidationError(f"index i must be 1, 2 or 3, got {self.i!r}")
        if risk is Risk.BAYES:
            if self.j is not None:
                raise ValidationError("Bayes risk takes a single index")
        elif self.j not in (1, 2, 3):
            raise ValidationError(f"index j must be 1, 2 or 3, got {self.j!r}")
        if 3 in (self.i, self.j):
            _needs_central(self.rule)

    @property
    def name(self) -> str:
        if self.risk is Risk.ENERGY:
            return self.energy
        if self.risk is Risk.BAYES:
            return f"bayes{self.i}"
        return f"{self.risk.value}{self.i}{self.j}"

    @classmethod
    def parse(cls, name: str, rule=ScoringRule.LOG) -> "MeasureSpec":
        """Build a spec from a short name such as ``bayes2``, ``exc31`` or ``energy-diff``."""
        key = name.strip().lower()
        if key in ENERGY_KINDS:
            return cls(Risk.ENERGY, rule, energy=key)
        for risk in (Risk.BAYES, Risk.EXCESS, Risk.TOTAL):
            prefix = risk.value
            if key.startswith(prefix) and key[len(prefix):].isdigit():
                digits = [int(c) for c in key[len(prefix):]]
                if risk is Risk.BAYES and len(digits) == 1:
                    return cls(risk, rule, digits[0])
                if risk is not Risk.BAYES and len(digits) == 2:
                    return cls(risk, rule, digits[0], digits[1])
        raise ValidationError(f"unknown measure {name!r}")


@dataclass(frozen=True)
class MeasureResult:
    spec: MeasureSpec
    scores: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=np.float64)
        if np.any(np.isnan(s)):
            raise InvariantViolation(f"NaN in scores for {self.spec.name}")
        object.__setattr__(self, "scores", s)


def _members(members) -> np.ndarray:
    m = np.asarray(members, dtype=np.float64)
    if m.ndim < 2 or m.shape[-2] < 1 or m.shape[-1] < 2:
        raise ValidationError(f"members must have shape (..., M >= 1, K >= 2), got {m.shape}")
    return m


class _PlugIns:
    """Lazily computed central label / central prediction for one stack."""

    def __init__(self, rule: ScoringRule, members):
        self.rule = rule
        self.members = _members(members)
        self._label = None
        self._central = None

    @property
    def label(self) -> np.ndarray:
        if self._label is None:
            self._label = central_label(self.members)
        return self._label

    @property
    def central(self) -> np.ndarray:
        if self._central is None:
            _needs_central(self.rule)
            self._central = central_prediction_array(self.rule, self.members)
        return self._central

    def point(self, idx: int) -> np.ndarray:
        return self.label if idx == 2 else self.central


def _bayes(p: _PlugIns, i: int) -> np.ndarray:
    if i == 1:
        return bayes_risk(p.rule, p.members).mean(axis=-1)
    return bayes_risk(p.rule, p.point(i))


def _epbd(rule: ScoringRule, members: np.ndarray, label: np.ndarray) -> np.ndarray:
    # Average of D(a || b) over all ordered member pairs, diagonal included.
    # D(a || b) is G(a) plus a function affine in a, so the average over a is
    # E G(a) - G(b) - <G'(b), mean - b>; this costs O(MK) instead of O(M^2 K).
    g = generator(rule, members)
    grad = subgradient(rule, members)
    diff = label[..., None, :] - members
    with np.errstate(invalid="ignore"):
        lin = np.where(diff == 0.0, 0.0, grad * diff).sum(axis=-1)
        per_b = g.mean(axis=-1)[..., None] - g - lin
    per_b = np.where(np.isnan(per_b), np.inf, per_b)
    return per_b.mean(axis=-1)


def epbd_pairwise(rule: ScoringRule, members) -> np.ndarray:
    """EPBD by brute force over all ``M**2`` ordered pairs (reference path)."""
    m = _members(members)
    d = excess_risk(rule, m[..., :, None, :], m[..., None, :, :])
    return d.mean(axis=(-2, -1))


def _excess(p: _PlugIns, i: int, j: int) -> np.ndarray:
    rule, m = p.rule, p.members
    if i == j and i != 1:
        if i == 3:
            p.central  # still reject rules without a central prediction
        return np.zeros(m.shape[:-2])
    if i == 1 and j == 1:
        return _epbd(rule, m, p.label)
    if i == 1:
        return excess_risk(rule, m, p.point(j)[..., None, :]).mean(axis=-1)
    if j == 1:
        return excess_risk(rule, p.point(i)[..., None, :], m).mean(axis=-1)
    return excess_risk(rule, p.point(i), p.point(j))


def _check(rule, i, j=None):
    if 3 in (i, j):
        _needs_central(rule)


def bayes_variant(rule: ScoringRule, members, i: int) -> np.ndarray:
    """Bayes risk approximation ``i``: mean of ``-G`` over members (1), or
    ``-G`` of the central label (2) or of the central prediction (3)."""
    _check(rule, i)
    return _bayes(_PlugIns(rule, members), i)


def excess_variant(rule: ScoringRule, members, i: int, j: int) -> np.ndarray:
    _check(rule, i, j)
    return _excess(_PlugIns(rule, members), i, j)


def total_variant(rule: ScoringRule, members, i: int, j: int) -> np.ndarray:
    """Total risk approximation, composed as ``bayes_variant(i) + excess_variant(i, j)``."""
    _check(rule, i, j)
    p = _PlugIns(rule, members)
    return _bayes(p, i) + _excess(p, i, j)


def total_variant_direct(rule: ScoringRule, members, i: int, j: int) -> np.ndarray:
    """Total risk approximation by plugging both arguments into the total risk.

    Index 1 averages over members in that argument, so ``(1, 1)`` evaluates
    all ``M**2`` pairs. Used to audit :func:`total_variant`.
    """
    _check(rule, i, j)
    p = _PlugIns(rule, members)
    m = p.members
    first = m[..., :, None, :] if i == 1 else p.point(i)[..., None, None, :]
    second = m[..., None, :, :] if j == 1 else p.point(j)[..., None, None, :]
    return total_risk(rule, first, second).mean(axis=(-2, -1))


def evaluate(spec: MeasureSpec, members) -> np.ndarray:
    """Score member stacks ``(..., M, K)`` of probabilities with ``spec``."""
    if spec.risk is Risk.BAYES:
        return bayes_variant(spec.rule, members, spec.i)
    if spec.risk is Risk.EXCESS:
        return excess_variant(spec.rule, members, spec.i, spec.j)
    if spec.risk is Risk.TOTAL:
        return total_variant(spec.rule, members, spec.i, spec.j)
    raise ValidationError("energy measures need logits; use uqt.energy or uqt.harness.score_samples")


def jensen_check(rule: ScoringRule, members, slack: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(bayes1, bayes2)``; raise if averaging the risk ever exceeds
    the risk of the average by more than ``slack``."""
    p = _PlugIns(rule, members)
    b1, b2 = _bayes(p, 1), _bayes(p, 2)
    bad = b1 > b2 + slack
    if np.any(bad):
        worst = float(np.max(b1 - b2))
        raise InvariantViolation(f"Jensen ordering violated for {rule.value}: bayes1 - bayes2 = {worst:.3g}")
    return b1, b2


@dataclass
class AuditReport:
    """Outcome of :func:`identity_audit`.

    ``residuals`` maps identity names to the largest absolute residual over
    determinate samples (``nan`` if none were determinate); ``indeterminate``
    counts samples where some term was infinite; ``skipped`` lists identities
    that need a central prediction the rule does not have.
    """

    rule: ScoringRule
    n_samples: int
    residuals: dict = field(default_factory=dict)
    indeterminate: dict = field(default_factory=dict)
    skipped: list = field(default_factory=list)

    def max_residual(self) -> float:
        vals = [v for v in self.residuals.values() if np.isfinite(v)]
        return max(vals) if vals else 0.0

    def passed(self, tolerance: float = 1e-9) -> bool:
        return all(not (v > tolerance) for v in self.residuals.values())

    def merge(self, other: "AuditReport") -> "AuditReport":
        out = AuditReport(self.rule, self.n_samples + other.n_samples, skipped=list(self.skipped))
        for name in self.residuals.keys() | other.residuals.keys():
            vals = [r.residuals[name] for r in (self, other) if name in r.residuals]
            vals = [v for v in vals if not np.isnan(v)]
            out.residuals[name] = max(vals) if vals else float("nan")
            out.indeterminate[name] = self.indeterminate.get(name, 0) + other.indeterminate.get(name, 0)
        return out


def _record(report: AuditReport, name: str, lhs, *terms):
    total = np.zeros_like(lhs, dtype=np.float64)
    values = [lhs]
    with np.errstate(invalid="ignore"):
        for sign, t in terms:
            values.append(t)
            total = total + sign * t
        res = np.abs(lhs - total)
    finite = np.all([np.isfinite(v) for v in values], axis=0)
    res = np.atleast_1d(res)[np.atleast_1d(finite)]
    report.residuals[name] = float(res.max()) if res.size else float("nan")
    report.indeterminate[name] = int(np.size(finite) - np.count_nonzero(finite))


def identity_audit(rule: ScoringRule, members) -> AuditReport:
    """Check the exact relations between the ensemble estimates.

    Identities (residuals are ``|lhs - rhs|`` per sample):

    * ``epbd=bi+rbi``: (1,1) = (1,2) + (2,1)
    * ``rbi=bias+mrbi``: (2,1) = (2,3) + (3,1)
    * ``epbd=mbi+mrbi``: (1,1) = (1,3) + (3,1)
    * ``bi=bayes2-bayes1``
    * ``rbi=tot11-tot12``
    * ``tot11=bayes2+mrbi+bias``
    * ``tot1j=tot2j`` for j = 1, 2, 3
    * ``tot=bayes+exc``: direct double plug-in against the composed total,
      for every admissible ``(i, j)``
    * Brier only: ``brier:bi=rbi=mbi=mrbi`` and ``brier:epbd=2bi``

    Identities involving the central prediction are skipped for rules
    without one. Totals on the left of an identity use the direct plug-in.
    """
    p = _PlugIns(rule, members)
    batch = p.members.shape[:-2]
    report = AuditReport(rule, int(np.prod(batch)) if batch else 1)
    has_central = rule not in (ScoringRule.ZERO_ONE, ScoringRule.NEG_LOG)
    idx = (1, 2, 3) if has_central else (1, 2)

    b = {i: _bayes(p, i) for i in idx}
    e = {(i, j): _excess(p, i, j) for i in idx for j in idx}
    t = {(i, j): total_variant_direct(rule, p.members, i, j) for i in idx for j in idx}

    _record(report, "epbd=bi+rbi", e[1, 1], (1, e[1, 2]), (1, e[2, 1]))
    _record(report, "bi=bayes2-bayes1", e[1, 2], (1, b[2]), (-1, b[1]))
    _record(report, "rbi=tot11-tot12", e[2, 1], (1, t[1, 1]), (-1, t[1, 2]))
    for j in idx:
        _record(report, f"tot1{j}=tot2{j}", t[1, j], (1, t[2, j]))

    worst, bad = 0.0, 0
    for (i, j), direct in t.items():
        composed = b[i] + e[i, j]
        finite = np.isfinite(direct) & np.isfinite(composed)
        bad = max(bad, int(np.size(finite) - np.count_nonzero(finite)))
        if np.any(finite):
            with np.errstate(invalid="ignore"):
                gap = np.abs(direct - composed)
            worst = max(worst, float(np.max(gap[finite])))
    report.residuals["tot=bayes+exc"] = worst
    report.indeterminate["tot=bayes+exc"] = bad

    central_names = ("rbi=bias+mrbi", "epbd=mbi+mrbi", "tot11=bayes2+mrbi+bias")
    if has_central:
        _record(report, "rbi=bias+mrbi", e[2, 1], (1, e[2, 3]), (1, e[3, 1]))
        _record(report, "epbd=mbi+mrbi", e[1, 1], (1, e[1, 3]), (1, e[3, 1]))
        _record(report, "tot11=bayes2+mrbi+bias", t[1, 1], (1, b[2]), (1, e[3, 1]), (1, e[2, 3]))
    else:
        report.skipped.extend(central_names + ("tot13=tot23",))

    if rule is ScoringRule.BRIER:
        group = np.stack([e[1, 2], e[2, 1], e[1, 3], e[3, 1]])
        report.residuals["brier:bi=rbi=mbi=mrbi"] = float(np.max(group.max(axis=0) - group.min(axis=0)))
        report.indeterminate["brier:bi=rbi=mbi=mrbi"] = 0
        _record(report, "brier:epbd=2bi", e[1, 1], (2, e[1, 2]))
    return report
