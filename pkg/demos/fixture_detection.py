"""OOD and misclassification AUROC of several measures on the bundled
synthetic fixtures (five logistic-regression members, two classes).

Run: python demos/fixture_detection.py
"""

from pathlib import Path

from uqt.estimators import MeasureSpec
from uqt.harness import misclassification_detect, ood_detect
from uqt.io import read_ensemble, read_labels

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

ood_in = read_ensemble(FIXTURES / "ood_in.uqt")
ood_out = read_ensemble(FIXTURES / "ood_out.uqt")
noisy = read_ensemble(FIXTURES / "noisy.uqt")
labels = read_labels(FIXTURES / "noisy_labels.csv")

measures = ["bayes1", "bayes2", "exc11", "exc12", "exc21", "exc31", "tot11", "energy-diff"]
print(f"{'measure':<12} {'OOD':>8} {'misclf':>8}")
for name in measures:
    spec = MeasureSpec.parse(name)
    a = ood_detect(ood_in, ood_out, spec).auroc
    b = misclassification_detect(noisy, labels, spec).auroc
    print(f"{name:<12} {a:8.4f} {b:8.4f}")
