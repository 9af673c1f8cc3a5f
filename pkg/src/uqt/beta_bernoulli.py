"""Beta-Bernoulli toy model with closed-form epistemic uncertainty.

A Bernoulli likelihood with a conjugate Beta prior gives a Beta posterior
over the success probability. When the same posterior approximates both
the true conditional and the prediction, EPKL, mutual information, reverse
mutual information and the expected pairwise Brier score have closed forms
in the digamma function. :func:`mc_validate` checks them against the
ensemble estimators on posterior draws.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from uqt.errors import ValidationError
from uqt.estimators import _PlugIns, _excess
from uqt.scoring import ScoringRule, excess_risk, generator, subgradient

# Bernoulli numbers B_2k / (2k) for the asymptotic digamma series, k = 1..8
_ASYMPTOTIC = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
)
_LIFT = 10.0

SHARD_SIZE = 1 << 16


def digamma(x):
    """Digamma function for positive real arguments.

    Shifts the argument above ``_LIFT`` with ``psi(x) = psi(x + 1) - 1/x``
    and then sums the asymptotic expansion through ``x**-16``.
    """
    x = np.asarray(x, dtype=np.float64)
    if np.any(~(x > 0)) or np.any(~np.isfinite(x)):
        raise ValidationError("digamma is implemented for finite positive arguments only")
    x = x.copy()
    shift = np.zeros_like(x)
    small = x < _LIFT
    while np.any(small):
        shift[small] += 1.0 / x[small]
        x[small] += 1.0
        small = x < _LIFT
    inv2 = 1.0 / (x * x)
    series = 0.0
    for c in reversed(_ASYMPTOTIC):
        series = (series + c) * inv2
    out = np.log(x) - 0.5 / x - series - shift
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class BetaPosterior:
    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValidationError(f"{name} must be a positive finite number, got {v!r}")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)

    @property
    def variance(self) -> float:
        s = self.alpha + self.beta
        return self.alpha * self.beta / (s * s * (s + 1.0))


def posterior_update(prior: BetaPosterior, successes: int, trials: int) -> BetaPosterior:
    if successes < 0 or trials < 0 or successes > trials:
        raise ValidationError(f"need 0 <= successes <= trials, got {successes} of {trials}")
    return BetaPosterior(prior.alpha + successes, prior.beta + trials - successes)


def epkl(p: BetaPosterior) -> float:
    """Expected pairwise KL divergence, ``1 / (alpha + beta)``."""
    return 1.0 / (p.alpha + p.beta)


def mutual_information(p: BetaPosterior) -> float:
    a, b = p.alpha, p.beta
    s = a + b
    psi_s = digamma(s)
    return float(
        1.0 / s
        + a / s * (digamma(a) - psi_s - math.log(a))
        + b / s * (digamma(b) - psi_s - math.log(b))
        + math.log(s)
    )


def reverse_mutual_information(p: BetaPosterior) -> float:
    a, b = p.alpha, p.beta
    s = a + b
    psi_s = digamma(s)
    return float(
        a / s * (math.log(a) - digamma(a) + psi_s)
        + b / s * (math.log(b) - digamma(b) + psi_s)
        - math.log(s)
    )


def epbs(p: BetaPosterior) -> float:
    """Expected pairwise Brier score: twice the posterior variance."""
    s = p.alpha + p.beta
    return 2.0 * p.alpha * p.beta / (s * s * (s + 1.0))


CLOSED_FORMS = {
    "EPKL": epkl,
    "MI": mutual_information,
    "RMI": reverse_mutual_information,
    "EPBS": epbs,
}


def draw_members(p: BetaPosterior, draws: int, seed: int, workers: int = 1) -> np.ndarray:
    """Posterior draws as two-class members ``(theta, 1 - theta)``, shape ``(draws, 2)``.

    Draws come in shards of ``SHARD_SIZE``. Shard ``s`` uses a PCG64
    generator seeded with ``SeedSequence(seed, spawn_key=(s,))`` and shards
    are concatenated in index order, so the result depends only on
    ``(seed, draws)`` and not on ``workers``.
    """
    if draws < 1:
        raise ValidationError("draws must be positive")
    n_shards = -(-draws // SHARD_SIZE)

    def shard(s):
        size = min(SHARD_SIZE, draws - s * SHARD_SIZE)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(s,))))
        return rng.beta(p.alpha, p.beta, size=size)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(shard, range(n_shards)))
    else:
        parts = [shard(s) for s in range(n_shards)]
    theta = np.concatenate(parts)
    return np.stack([theta, 1.0 - theta], axis=-1)


def _influence(rule: ScoringRule, members: np.ndarray, label: np.ndarray, i: int, j: int) -> np.ndarray:
    """Per-draw influence values of an excess estimate; their standard
    deviation over sqrt(draws) is the delta-method standard error."""
    g = generator(rule, members)
    grad = subgradient(rule, members)
    if (i, j) == (1, 2):
        # the mean is stationary for E D(member || z), so no correction term
        return excess_risk(rule, members, label[None, :])
    if (i, j) == (2, 1):
        correction = (subgradient(rule, label) - grad.mean(axis=0)) @ members.T
        return excess_risk(rule, label[None, :], members) + correction
    if (i, j) == (1, 1):
        # V-statistic over pairs: h1(a) = E_b D(a || b), h2(b) = E_a D(a || b)
        mean_grad = grad.mean(axis=0)
        h1 = g - g.mean() - members @ mean_grad + np.mean(np.sum(grad * members, axis=-1))
        h2 = g.mean() - g - np.sum(grad * (label[None, :] - members), axis=-1)
        return h1 + h2
    raise ValidationError(f"no influence function for ({i}, {j})")


@dataclass(frozen=True)
class MCRow:
    measure: str
    rule: str
    indices: tuple
    closed_form: float
    estimate: float
    std_error: float

    @property
    def abs_error(self) -> float:
        return abs(self.estimate - self.closed_form)

    @property
    def z_score(self) -> float:
        return self.abs_error / self.std_error if self.std_error > 0 else math.inf

    def within(self, sigmas: float = 3.0) -> bool:
        return self.abs_error <= sigmas * self.std_error


@dataclass(frozen=True)
class MCReport:
    posterior: BetaPosterior
    draws: int
    seed: int
    rows: tuple

    def passed(self, sigmas: float = 3.0) -> bool:
        return all(r.within(sigmas) for r in self.rows)


# EPBS is defined on the success probability alone, E (theta' - theta)^2. The
# two-class Brier divergence counts that squared gap once per class, so the
# ensemble EPBD on (theta, 1 - theta) members is exactly twice EPBS.
_MC_PLAN = (
    ("EPKL", ScoringRule.LOG, (1, 1), 1.0),
    ("MI", ScoringRule.LOG, (1, 2), 1.0),
    ("RMI", ScoringRule.LOG, (2, 1), 1.0),
    ("EPBS", ScoringRule.BRIER, (1, 1), 0.5),
)


def mc_validate(p: BetaPosterior, draws: int = 1_000_000, seed: int = 0, workers: int = 1) -> MCReport:
    """Compare ensemble estimators on posterior draws with the closed forms.

    The draws are treated as one ensemble of ``draws`` members on a single
    input; EPKL, MI and RMI use the log score, EPBS half the two-class
    Brier EPBD.
    """
    if draws < 10_000:
        raise ValidationError("mc_validate needs at least 1e4 draws")
    members = draw_members(p, draws, seed, workers)
    rows = []
    for name, rule, (i, j), scale in _MC_PLAN:
        plug = _PlugIns(rule, members)
        estimate = scale * float(_excess(plug, i, j))
        infl = scale * _influence(rule, members, plug.label, i, j)
        se = float(np.std(infl, ddof=1) / math.sqrt(draws))
        rows.append(MCRow(name, rule.value, (i, j), CLOSED_FORMS[name](p), estimate, se))
    return MCReport(p, draws, seed, tuple(rows))


def sweep(alpha_prior: float, beta_prior: float, ns, success_rate: float):
    """Closed-form measures along growing training sets at a fixed success rate.

    Yields dicts with keys ``alpha_prior, beta_prior, n, successes, alpha,
    beta, EPKL, MI, RMI, EPBS``.
    """
    prior = BetaPosterior(alpha_prior, beta_prior)
    for n in ns:
        x = int(round(success_rate * n))
        post = posterior_update(prior, x, int(n))
        row = {
            "alpha_prior": prior.alpha,
            "beta_prior": prior.beta,
            "n": int(n),
            "successes": x,
            "alpha": post.alpha,
            "beta": post.beta,
        }
        row.update({k: f(post) for k, f in CLOSED_FORMS.items()})
        yield row
