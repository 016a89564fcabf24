"""Fractal interpolation through four nodes.

Every admissible way of assigning node intervals to the three branches gives
a different Markov system; the zero of the pressure is the graph dimension.
"""
from pathlib import Path

import numpy as np

from repdim import (
    PRESET_LAMBDAS,
    PRESET_NODES,
    ImageSpec,
    preset_interpolation,
    justify_dimension,
    sample_graph,
    search_assignments,
    write_image,
)

OUT = Path(__file__).with_name("out")

print("nodes:", [(str(x), str(y)) for x, y in PRESET_NODES])
print("fiber ratios:", [str(v) for v in PRESET_LAMBDAS])
print()
print(f"{'assignment':<28} s0")
for assign, s0 in search_assignments(PRESET_NODES, PRESET_LAMBDAS):
    print(f"{str(assign):<28} {s0:.5f}")

# the two systems drawn side by side in the usual picture
OUT.mkdir(exist_ok=True)
xs = np.linspace(0, 1, 8193)
for name in ("T1", "T2"):
    S = preset_interpolation(name)
    rep = justify_dimension(S)
    g = sample_graph(S, xs, N=60)
    write_image(OUT / f"interp_{name}.ppm", (xs, g.ys), ImageSpec(800, 600))
    print(f"\n{name}: s0 = {rep.s0:.5f}, theorem {rep.theorem}, verified {rep.verified}")
    print(f"  sample error bound {g.error_bound:.2e}; image in {OUT / f'interp_{name}.ppm'}")
