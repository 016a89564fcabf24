"""Three independent routes to the pressure.

The spectral radius of the weighted transition matrix is compared with the
finite-n sums over cylinders, using singular values or ratio products.
"""
import math

import numpy as np

from repdim import (
    comparability_constant,
    preset_interpolation,
    perron_prefactor,
    pressure_at,
    pressure_bruteforce,
    singular_value_phi,
)

S = preset_interpolation("T1")
print("singular value function of [[1/2,0],[1/2,3/4]] at s = 3/2:",
      f"{singular_value_phi(np.array([[0.5, 0], [0.5, 0.75]]), 1.5):.6f}\n")
print("  s     P(s)      n=4       n=8      n=10     bound(n=10)")
for s in (0.5, 1.0, 1.39, 1.8):
    exact = pressure_at(S, s=s)
    brute = [pressure_bruteforce(S, s=s, n=n) for n in (4, 8, 10)]
    bound = (math.log(comparability_constant(S, s)) + math.log(perron_prefactor(S, None, s))) / 10
    print(f"{s:4.2f}  {exact:+.5f}  " + "  ".join(f"{b:+.5f}" for b in brute) + f"  {bound:.4f}")
