"""Uniform sampling is enough to ESTIMATE leverage scores.

A uniform row subset is a poor spectral approximation, but scores computed
through it are always one-sided (never below the truth) and their total is
small on average: about n*d/m for an m-row subset.  That is exactly what an
iterative sampler needs.

Run:  python3 demos/02_uniform_estimation.py
"""

import numpy as np

from rowsketch import (SketchConfig, SparseRowMatrix, exact_leverage_scores,
                       monte_carlo, uniform_leverage_estimates,
                       uniform_no_reweight_estimates)

n, d, m = 1024, 16, 128
# rows shrink like (i+1)^-0.8: early rows carry high leverage
g = np.random.default_rng(1).standard_normal((n, d))
A = SparseRowMatrix.from_dense(g * ((np.arange(n) + 1.0) ** -0.8)[:, None])
tau = exact_leverage_scores(A).values

print(f"matrix {n} x {d}; true score mass = rank = {tau.sum():.2f}")
print(f"uniform subset size m = {m}; estimate mass bound nd/m = {n * d / m:.0f}\n")

cfg = SketchConfig(seed=7)
est = uniform_leverage_estimates(A, m, cfg)
print("single draw:")
print(f"  estimate mass          {est.values.sum():8.2f}")
print(f"  overestimates truth?   {bool(np.all(est.values >= tau - 1e-8))}")
print(f"  largest overshoot      {np.max(est.values - tau):.4f}")

# the mean over many draws sits below nd/m
def trial(seed):
    e = uniform_leverage_estimates(A, m, SketchConfig(seed=seed))
    return float(e.values.sum()), True

res = monte_carlo(trial, 200, master_seed=99)
print(f"\nmean estimate mass over 200 draws: {res.mean:.2f} (stderr {res.stderr:.2f})")
print(f"bound nd/m = {n * d / m:.0f}")

# Bernoulli selection without reweighting gives the same one-sidedness
est2 = uniform_no_reweight_estimates(A, m, cfg)
print(f"\nBernoulli(m/n) variant, capped at 1: mass {est2.values.sum():.2f}, "
      f"one-sided: {bool(np.all(est2.values >= tau - 1e-8))}")
