"""How the closed-form measures shrink as a Beta posterior sees more data,
with a Monte Carlo cross-check of the ensemble estimators at a few points.

Run: python demos/beta_bernoulli_sweep.py
"""

from uqt import beta_bernoulli as bb

ns = [0, 1, 2, 5, 10, 20, 50, 100, 200, 500, 1000]
print(f"{'n':>5} {'alpha':>7} {'beta':>7} {'EPKL':>10} {'MI':>10} {'RMI':>10} {'EPBS':>10}")
for row in bb.sweep(1.0, 1.0, ns, success_rate=0.3):
    print(f"{row['n']:>5} {row['alpha']:>7g} {row['beta']:>7g} "
          f"{row['EPKL']:>10.6f} {row['MI']:>10.6f} {row['RMI']:>10.6f} {row['EPBS']:>10.6f}")

print()
for a, b in [(1, 1), (4, 8), (31, 71)]:
    report = bb.mc_validate(bb.BetaPosterior(a, b), draws=200_000, seed=1)
    checks = ", ".join(f"{r.measure} z={r.z_score:.2f}" for r in report.rows)
    print(f"Beta({a},{b}): {checks}")
