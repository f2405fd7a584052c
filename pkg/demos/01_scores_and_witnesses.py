"""Leverage scores from scratch: what they measure and how to read them.

Run:  python3 demos/01_scores_and_witnesses.py
"""

import numpy as np

from rowsketch import (SparseRowMatrix, cross_leverage, exact_leverage_scores,
                       factor_gram, generalized_leverage_scores,
                       min_norm_witness)

rng = np.random.default_rng(0)

# A tall matrix: 200 ordinary rows plus one row pointing somewhere no other
# row does.  Leverage measures how hard a row is to replace.
ordinary = rng.standard_normal((200, 6))
ordinary[:, -1] = 0.0
special = np.zeros(6)
special[-1] = 2.5
A = SparseRowMatrix.from_dense(np.vstack([ordinary, special]))

tau = exact_leverage_scores(A)
print(f"matrix: {A.n_rows} x {A.n_cols}, rank {factor_gram(A).rank}")
print(f"scores sum to the rank: {tau.values.sum():.6f}")
print(f"typical row score:      {np.median(tau.values):.4f}")
print(f"the irreplaceable row:  {tau.values[-1]:.4f}   <- leverage 1, drop it and rank falls")

# The minimum-norm witness x solves A'x = a_i; its squared norm IS the
# score, and its entries are the cross scores.
i = 3
x = min_norm_witness(A, i)
print(f"\nwitness for row {i}: ||x||^2 = {x @ x:.6f} vs tau_{i} = {tau.values[i]:.6f}")
print(f"witness entry x[10] = {x[10]:.6f} vs cross score tau_(3,10) = {cross_leverage(A, 3, 10):.6f}")

# Generalized scores measure row importance through ANOTHER matrix's Gram
# pseudoinverse.  Rows leaning into that matrix's kernel are flagged.
B = SparseRowMatrix.from_dense(ordinary)  # drops the special direction
g = generalized_leverage_scores(A, B)
print(f"\nscores of A measured through B (which misses the special direction):")
print(f"flagged infinite: {int(g.infinite.sum())} row(s) -> row {int(np.flatnonzero(g.infinite)[0])}")
print("that flag is what stops samplers from ever dropping the special row.")
