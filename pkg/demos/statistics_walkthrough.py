"""Tour of the correlation and agreement statistics.

Run: python3 demos/statistics_walkthrough.py
"""

import numpy as np

from cultdiff.stats import (
    fleiss_kappa,
    kendall_tau_b,
    kendall_tau_c,
    pearson_r,
    sem,
    spearman_rho,
)

rng = np.random.default_rng(0)

# A metric that tracks human scores with some noise.
human = rng.integers(1, 6, size=30).astype(float)
metric = human + rng.normal(0, 0.8, size=30)

print("metric vs human (30 items, Likert-style ties in y):")
print(f"  spearman rho : {spearman_rho(metric, human):+.4f}")
print(f"  pearson r    : {pearson_r(metric, human):+.4f}")
print(f"  kendall tau_b: {kendall_tau_b(metric, human):+.4f}")
print(f"  kendall tau_c: {kendall_tau_c(metric, human):+.4f}")
print("tau_b corrects for ties on both sides; tau_c additionally corrects")
print("for the rectangular table (few distinct y values vs many x values).")
print()

# Fleiss' kappa from an item x category count matrix: 3 raters, 5 levels.
counts = np.zeros((12, 5), dtype=int)
true_level = rng.integers(0, 5, size=12)
for i, level in enumerate(true_level):
    for _ in range(3):
        rating = int(np.clip(level + rng.integers(-1, 2), 0, 4))
        counts[i, rating] += 1

report = fleiss_kappa(counts)
print("Fleiss' kappa on 12 items rated by 3 annotators:")
print(f"  kappa={report.kappa:+.4f}  P_bar={report.p_bar:.4f}  P_e={report.p_e:.4f}")
print()

print("standard error of the mean:")
print(f"  sem([1, 5])      = {sem([1.0, 5.0])}   (sample sd 2*sqrt(2) over sqrt(2))")
print(f"  sem([3, 3, 3])   = {sem([3.0, 3.0, 3.0])}")
print(f"  sem([3]) is None = {sem([3.0]) is None}  (undefined, never reported as 0)")
