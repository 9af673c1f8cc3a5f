"""Generate the synthetic ensemble fixtures under tests/fixtures/.

Two classes, each a 2-D Gaussian. Five logistic-regression members are
trained by full-batch gradient descent, each on its own bootstrap resample
and from its own random start. Outputs are stored as logits.

* ood_in.uqt / ood_out.uqt: clean in-distribution test points and a third
  Gaussian placed far along the decision boundary.
* noisy.uqt / noisy_labels.csv: overlapping classes with 20% of the test
  labels flipped, for misclassification detection.

Run from the repository root: ``python3 scripts/make_fixtures.py``.
"""

from pathlib import Path

import numpy as np

from uqt.io import write_ensemble, write_labels
from uqt.simplex import EnsemblePredictions, PredictionKind

SEED = 20240611
MEMBERS = 5
OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def two_gaussians(rng, n, separation):
    y = rng.integers(0, 2, size=n)
    centers = np.array([[-separation / 2, 0.0], [separation / 2, 0.0]])
    return centers[y] + rng.standard_normal((n, 2)), y


def train_logistic(rng, x, y, steps=400, lr=0.5):
    xb = np.hstack([x, np.ones((len(x), 1))])
    w = 0.5 * rng.standard_normal((3, 2))
    onehot = np.eye(2)[y]
    for _ in range(steps):
        z = xb @ w
        z -= z.max(axis=1, keepdims=True)
        p = np.exp(z)
        p /= p.sum(axis=1, keepdims=True)
        w -= lr * xb.T @ (p - onehot) / len(x)
    return w


def ensemble(rng, x, y):
    weights = []
    for _ in range(MEMBERS):
        idx = rng.integers(0, len(x), size=len(x))
        weights.append(train_logistic(rng, x[idx], y[idx]))
    return weights


def logits(weights, x):
    xb = np.hstack([x, np.ones((len(x), 1))])
    return np.stack([xb @ w for w in weights])


def main():
    rng = np.random.default_rng(SEED)
    OUT.mkdir(parents=True, exist_ok=True)

    x, y = two_gaussians(rng, 400, separation=4.0)
    members = ensemble(rng, x, y)
    x_in, _ = two_gaussians(rng, 500, separation=4.0)
    x_out = np.array([0.0, 10.0]) + rng.standard_normal((500, 2))
    write_ensemble(OUT / "ood_in.uqt", EnsemblePredictions(logits(members, x_in), PredictionKind.LOGITS))
    write_ensemble(OUT / "ood_out.uqt", EnsemblePredictions(logits(members, x_out), PredictionKind.LOGITS))

    x, y = two_gaussians(rng, 400, separation=2.0)
    flip = rng.random(len(y)) < 0.2
    members = ensemble(rng, x, np.where(flip, 1 - y, y))
    x_test, y_test = two_gaussians(rng, 1000, separation=2.0)
    flip = rng.random(len(y_test)) < 0.2
    write_ensemble(OUT / "noisy.uqt", EnsemblePredictions(logits(members, x_test), PredictionKind.LOGITS))
    write_labels(OUT / "noisy_labels.csv", np.where(flip, 1 - y_test, y_test))


if __name__ == "__main__":
    main()
