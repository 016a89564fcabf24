"""The classic Takagi graph, computed four ways.

1. closed form 2 + log(lambda)/log(beta)
2. zero of the pressure of the skew product
3. Lyapunov dimension of the equilibrium measure
4. box counting on samples and on attractor covers
"""
from fractions import Fraction

import numpy as np

from repdim import (
    attractor_cover,
    box_count_dimension,
    dimension_root,
    equilibrium_measure,
    essentially_nondiagonal,
    holder_estimate,
    lyapunov_dimension,
    takagi_closed_form,
    takagi_partial_sum,
    takagi_system,
)

beta, lam = 2, Fraction(3, 4)
S = takagi_system(beta, lam)

closed = takagi_closed_form(beta, lam)
s0 = dimension_root(S).s0
mu = equilibrium_measure(S, s=s0)
print(f"closed form      {closed:.9f}")
print(f"pressure root    {s0:.9f}")
print(f"Lyapunov dim     {lyapunov_dimension(S, mu):.9f}   (weights {mu.p})")

v = essentially_nondiagonal(S)
print(f"non-diagonal witness: i={v.witness['i']} j={v.witness['j']} h={v.witness['h']}, "
      f"slopes {v.witness['slope_i']} / {v.witness['slope_j']}")

n = 2**16
xs = np.arange(n) / (n - 1)
ys, err = takagi_partial_sum(beta, lam, xs, 40)
box = box_count_dimension(np.column_stack([xs, ys]), mode="graph")
hol = holder_estimate(xs, ys)
print(f"\n2^16 samples (tail error {err:.1e})")
print(f"  box-counting slope   {box.slope:.4f}  (r2 {box.r2:.5f}, window {box.window})")
print(f"  Holder exponent      {hol.exponent:.4f}  vs -log(lambda)/log(beta) = {-np.log(0.75) / np.log(2):.4f}")

print("\ncover depth  rectangles  slope")
for depth in (6, 8, 10):
    c = attractor_cover(S, depth)
    print(f"{depth:>11}  {len(c):>10}  {box_count_dimension(c).slope:.4f}")
