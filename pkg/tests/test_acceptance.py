"""Acceptance criteria 1-9, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -s`` or directly as a script.
"""
import math
import sys
import time
from fractions import Fraction as F
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import diagonal_system, random_interpolation  # noqa: E402

from repdim.approx import markov_subset, qstep_bernoulli, subsystem_dimension  # noqa: E402
from repdim.builders import (  # noqa: E402
    PRESET_LAMBDAS,
    PRESET_NODES,
    multivariable_takagi,
    search_assignments,
    takagi_closed_form,
    takagi_system,
)
from repdim.conditions import essentially_nondiagonal, furstenberg_ifs  # noqa: E402
from repdim.estimation import box_count_dimension, holder_estimate, takagi_partial_sum  # noqa: E402
from repdim.pressure import (  # noqa: E402
    bernoulli_measure,
    comparability_constant_literal,
    dimension_root,
    equilibrium_measure,
    lyapunov_dimension,
    pressure_at,
    pressure_bruteforce,
)


def criterion_1():
    start = time.perf_counter()
    found = search_assignments(PRESET_NODES, PRESET_LAMBDAS)
    elapsed = time.perf_counter() - start
    values = [s for _, s in found]
    hits = [min(abs(s - t) for s in values) for t in (1.39024, 1.45156)]
    ok = all(h <= 5e-5 for h in hits) and elapsed < 1.0
    return ok, f"roots {sorted(round(v, 5) for v in values)}, misses {hits[0]:.1e}/{hits[1]:.1e}, {elapsed:.2f}s"


def criterion_2():
    start = time.perf_counter()
    closed = takagi_closed_form(F(3, 2), F(3, 4))
    base = takagi_system(F(3, 2), F(3, 4))
    s = [subsystem_dimension(markov_subset(base, k), F(3, 4)) for k in (4, 6, 8)]
    elapsed = time.perf_counter() - start
    ok = (
        abs(closed - 1.29049) <= 1e-4
        and all(a < b for a, b in zip(s, s[1:]))
        and closed - s[-1] < 0.08
        and elapsed < 30
    )
    return ok, f"closed form {closed:.6f}, s_k (k=4,6,8) {[round(v, 5) for v in s]}, {elapsed:.1f}s"


def criterion_3():
    S = takagi_system(2, F(3, 4))
    s0 = dimension_root(S).s0
    closed = takagi_closed_form(2, F(3, 4))
    mu = equilibrium_measure(S, s=s0)
    p = np.asarray(mu.marginal, dtype=float)
    ld = lyapunov_dimension(S, mu)
    ok = (
        abs(s0 - 1.5849625) <= 1e-7
        and abs(s0 - closed) <= 1e-7
        and mu.variant == "bernoulli"
        and np.max(np.abs(mu.p - 0.5)) <= 1e-9
        and np.max(np.abs(p - 0.5)) <= 1e-9
        and abs(ld - s0) <= 1e-6
    )
    return ok, f"s0 {s0:.9f}, p {np.round(mu.p, 12).tolist()}, D(mu) - s0 {ld - s0:.1e}"


def criterion_4():
    res = multivariable_takagi((2, 2), F(2, 3))
    ok = abs(res.dimension - 2.4150375) <= 1e-7
    return ok, f"dimension {res.dimension:.9f}"


def _constant_ratio_systems():
    # constant ratios on a full shift, so the word count is exactly rho^n
    return {
        "takagi(2,3/4)": takagi_system(2, F(3, 4)),
        "takagi(4,1/2)": takagi_system(4, F(1, 2)),
        "mtakagi(2,2;2/3)": multivariable_takagi((2, 2), F(2, 3)).system,
        "diagonal(3/2,3/2)": diagonal_system((F(3, 2), F(3, 2))),
    }


def criterion_5():
    rng = np.random.default_rng(20261014)
    worst_margin = math.inf
    rows = []
    for _ in range(5):
        S = random_interpolation(rng)
        c = comparability_constant_literal(S)
        for s in (0.5, 1.0, 1.3, 1.7):
            gap = abs(pressure_bruteforce(S, s=s, n=10) - pressure_at(S, s=s))
            bound = math.log(c) / 10 if c > 0 else -math.inf
            worst_margin = min(worst_margin, bound - gap)
        rows.append(round(c, 3))
    rect = 0.0
    for S in _constant_ratio_systems().values():
        for s in (0.5, 1.0, 1.5, 2.2):
            if s > S.d + S.k:
                continue
            rect = max(rect, abs(pressure_bruteforce(S, s=s, n=8, mode="rectangle") - pressure_at(S, s=s)))
    ok = worst_margin >= 0 and rect <= 1e-12
    return ok, f"literal c {rows}, min(bound - gap) {worst_margin:.3e}, rectangle max diff {rect:.1e}"


def criterion_6():
    base = takagi_system(F(3, 2), F(3, 4))
    h = [markov_subset(base, k).entropy for k in (4, 6, 8)]
    top = math.log(1.5)
    ok = all(a <= b for a, b in zip(h, h[1:])) and all(v <= top + 1e-12 for v in h) and top - h[-1] < 0.05
    return ok, f"entropies {[round(v, 5) for v in h]} vs log(3/2) {top:.6f}"


def criterion_7():
    S = takagi_system(2, F(3, 4))
    v = essentially_nondiagonal(S)
    ifs = furstenberg_ifs(S)
    fps = sorted(ifs.fixed_point(i)[0] for i in range(ifs.size))
    control = essentially_nondiagonal(diagonal_system(), depth=6)
    ok = (
        v.holds
        and sorted([v.witness["slope_i"], v.witness["slope_j"]]) == [-2, 2]
        and fps == [-2, 2]
        and not control.holds
        and control.to_dict()["status"] == "not found up to depth 6"
    )
    return ok, (
        f"witness i={v.witness['i']} j={v.witness['j']} h={v.witness['h']} slopes "
        f"{v.witness['slope_i']},{v.witness['slope_j']}; fixed points {[str(x) for x in fps]}; control: "
        f"{control.to_dict()['status']}"
    )


def criterion_8():
    start = time.perf_counter()
    n = 2**16
    xs = np.arange(n) / (n - 1)
    ys, _ = takagi_partial_sum(2, 0.75, xs, 40)
    box = box_count_dimension(np.column_stack([xs, ys]), mode="graph")
    hol = holder_estimate(xs, ys)
    elapsed = time.perf_counter() - start
    target_h = -math.log(0.75) / math.log(2)
    ok = abs(box.slope - 1.585) <= 0.1 and abs(hol.exponent - target_h) <= 0.05 and elapsed < 60
    return ok, f"box slope {box.slope:.4f} (r2 {box.r2:.4f}), Holder {hol.exponent:.4f}, {elapsed:.1f}s"


def criterion_9():
    mu = bernoulli_measure([0.5, 0.5])
    Q = np.ones((2, 2))
    h = qstep_bernoulli(Q, mu, 0, 10, 1).entropy
    S = takagi_system(2, F(3, 4))
    s0 = dimension_root(S).s0
    dims = [lyapunov_dimension(S, qstep_bernoulli(Q, mu, 0, q, 1)) for q in range(4, 13)]
    ok = abs(h - 0.8 * math.log(2)) <= 1e-12 and max(dims) <= s0 + 1e-6
    return ok, f"entropy {h:.12f} vs {0.8 * math.log(2):.12f}, max D {max(dims):.6f} <= s0 {s0:.6f}"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9]


def _report(i, ok, detail):
    return f"{'PASS' if ok else 'FAIL'} criterion {i}: {detail}"


@pytest.mark.parametrize("i", range(1, 10))
def test_criterion(i, capsys):
    ok, detail = CRITERIA[i - 1]()
    with capsys.disabled():
        print("\n" + _report(i, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    results = [(i, *f()) for i, f in enumerate(CRITERIA, start=1)]
    for i, ok, detail in results:
        print(_report(i, ok, detail))
    sys.exit(0 if all(ok for _, ok, _ in results) else 1)
