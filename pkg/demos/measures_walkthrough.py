"""Every risk estimate for one small ensemble, under each scoring rule.

Run: python demos/measures_walkthrough.py
"""

import numpy as np

from uqt.central import central_label, central_prediction_array
from uqt.errors import UndefinedMeasureError
from uqt.estimators import MeasureSpec, evaluate
from uqt.scoring import DEFAULT_RULES

# three members that agree on the top class but not on how sure to be
members = np.array([[0.70, 0.20, 0.10],
                    [0.55, 0.35, 0.10],
                    [0.90, 0.05, 0.05]])

print("central label      ", np.round(central_label(members), 4))
for rule in DEFAULT_RULES:
    try:
        print(f"central {rule.value:<11}", np.round(central_prediction_array(rule, members), 4))
    except UndefinedMeasureError:
        print(f"central {rule.value:<11} (not defined)")

names = ["bayes1", "bayes2", "bayes3", "exc11", "exc12", "exc21", "exc13", "exc31", "tot11", "tot12"]
print()
print(f"{'measure':<8}" + "".join(f"{r.value:>12}" for r in DEFAULT_RULES))
for name in names:
    cells = []
    for rule in DEFAULT_RULES:
        try:
            cells.append(f"{float(evaluate(MeasureSpec.parse(name, rule), members)):12.6f}")
        except UndefinedMeasureError:
            cells.append(f"{'-':>12}")
    print(f"{name:<8}" + "".join(cells))
