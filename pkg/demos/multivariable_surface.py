"""Takagi sums over the unit square and cube."""
from fractions import Fraction
from pathlib import Path

import numpy as np

from repdim import ImageSpec, dimension_root, multivariable_takagi, takagi_surface, write_image

OUT = Path(__file__).with_name("out")

for betas, lam in [((2, 2), Fraction(2, 3)), ((2, 4, 2), Fraction(1, 3)), ((2, 3), Fraction(2, 3))]:
    res = multivariable_takagi(betas, lam)
    line = f"betas {betas}, lambda {lam}: formula {res.dimension:.7f}"
    if res.system is not None:
        line += f", pressure root {dimension_root(res.system).s0:.7f} ({res.system.size} branches)"
    else:
        line += "  (no single skew product for unequal slopes)"
    print(line)

OUT.mkdir(exist_ok=True)
g = np.arange(513) / 512
Z, err = takagi_surface((2, 2), Fraction(2, 3), (g, g), 40)
write_image(OUT / "surface.ppm", Z, ImageSpec(512, 512), surface=True)
print(f"\nheightmap of the (2,2) surface in {OUT / 'surface.ppm'} (truncation error {err:.1e})")
