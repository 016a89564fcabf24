"""Non-integer slope: the beta-Takagi function with beta = 3/2.

The base map x -> 3x/2 mod 1 has no finite Markov partition, so the root is
reached from below through Markov subsystems of its iterates.
"""
import math
from fractions import Fraction

import numpy as np

from repdim import markov_subset, subsystem_dimension, takagi_closed_form, takagi_partial_sum, takagi_system
from repdim import box_count_dimension, holder_estimate

beta, lam = Fraction(3, 2), Fraction(3, 4)
S = takagi_system(beta, lam)
target = takagi_closed_form(beta, lam)
print(f"closed form 3 - log 2 / log(3/2) = {target:.5f}; entropy ceiling log(3/2) = {math.log(1.5):.5f}\n")
print(" k  cells  entropy   s_k      gap")
for k in (4, 5, 6, 7, 8):
    sub = markov_subset(S, k)
    s = subsystem_dimension(sub, lam)
    print(f"{k:>2}  {sub.size:>5}  {sub.entropy:.5f}  {s:.5f}  {target - s:.4f}")

n = 2**16
xs = np.arange(n) / (n - 1)
ys, _ = takagi_partial_sum(beta, lam, xs, 40)
P = np.column_stack([xs, ys])
print(f"\nbox counting: points {box_count_dimension(P).slope:.4f}, graph {box_count_dimension(P, mode='graph').slope:.4f}")
# the graph jumps where the base map does, so the sup oscillation stays large at every lag
print(f"Holder, sup statistic {holder_estimate(xs, ys).exponent:.3f}; "
      f"90% quantile {holder_estimate(xs, ys, statistic=0.9).exponent:.3f}")
