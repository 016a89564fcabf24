"""Constructors for the example families.

* fractal interpolation systems on a data set ``(x_i, y_i)``
* beta-Takagi systems ``F(x, y) = (beta x mod 1, (y -/+ dist(x, Z)) / lambda)``
* multivariable Takagi systems over a product partition of ``[0, 1]^d``

Every builder returns a validated :class:`~repdim.core.SkewSystem`.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import errors
from .core import BaseBranch, FiberBranch, SkewSystem, build_system, is_exact, parse_number

ONE = Fraction(1)
ZERO = Fraction(0)
HALF = Fraction(1, 2)

# branch (k, l) targets recovered by searching all admissible assignments
PRESET_ASSIGNMENTS = {
    "T1": ((0, 2), (0, 3), (1, 3)),
    "T2": ((0, 3), (0, 3), (1, 3)),
}
PRESET_NODES = ((0, 0), (Fraction(1, 3), Fraction(2, 3)), (Fraction(2, 3), Fraction(1, 3)), (1, 1))
PRESET_LAMBDAS = (Fraction(3, 2), Fraction(2), Fraction(3, 2))


def _num(v):
    return parse_number(v)


# --------------------------------------------------------------------------- interpolation


@dataclass(frozen=True)
class InterpolationData:
    nodes: tuple  # ((x_0, y_0), ..., (x_N, y_N))
    assignments: tuple  # ((k_1, l_1), ..., (k_N, l_N))
    lambdas: tuple

    @classmethod
    def create(cls, nodes, assignments, lambdas) -> "InterpolationData":
        nodes = tuple((_num(x), _num(y)) for x, y in nodes)
        assignments = tuple((int(k), int(l)) for k, l in assignments)
        lambdas = tuple(_num(v) for v in lambdas)
        return cls(nodes, assignments, lambdas)

    @property
    def N(self) -> int:
        return len(self.nodes) - 1


def _check_nodes(nodes):
    if len(nodes) < 3:
        raise errors.AlphabetTooSmall("at least three nodes (two branches) are required")
    xs = [x for x, _ in nodes]
    if not (float(xs[0]) == 0 and float(xs[-1]) == 1):
        raise errors.MalformedSystem("nodes must start at x=0 and end at x=1")
    if any(not float(a) < float(b) for a, b in zip(xs, xs[1:])):
        raise errors.MalformedSystem("node abscissae must be strictly increasing")


def interpolation_coefficients(data: InterpolationData, i: int):
    """Base ratio and shift, fiber coupling ``a`` and shift ``d`` of branch ``i`` (0-based)."""
    (x0, y0), (x1, y1) = data.nodes[i], data.nodes[i + 1]
    k, l = data.assignments[i]
    lam = data.lambdas[i]
    (xk, yk), (xl, yl) = data.nodes[k], data.nodes[l]
    dx = x1 - x0
    gamma = (xl - xk) / dx
    shift = xk - gamma * x0
    a = (yl - yk) / dx - lam * (y1 - y0) / dx
    d = (yk * x1 - yl * x0) / dx + lam * (y1 * x0 - y0 * x1) / dx
    return gamma, shift, a, d


def interpolation_system(data: InterpolationData, nodes_meta: bool = True) -> SkewSystem:
    """Fractal interpolation system.

    Branch ``i`` maps ``[x_(i-1), x_i]`` affinely onto ``[x_k, x_l]`` in the
    base and acts as ``g_i(x, y) = a_i x + lambda_i y + d_i`` in the fiber,
    with ``a_i, d_i`` chosen so the invariant graph passes through the nodes.
    """
    if not isinstance(data, InterpolationData):
        raise errors.ValidationError("expected InterpolationData")
    _check_nodes(data.nodes)
    N = data.N
    if len(data.assignments) != N or len(data.lambdas) != N:
        raise errors.MalformedSystem(f"need {N} assignments and {N} fiber ratios")
    cells, bases, fibers = [], [], []
    for i in range(N):
        k, l = data.assignments[i]
        if not (0 <= k < l <= N):
            raise errors.BadAssignment(f"branch {i + 1}: need 0 <= k < l <= {N}, got ({k}, {l})")
        gamma, shift, a, d = interpolation_coefficients(data, i)
        lam = data.lambdas[i]
        if not (float(gamma) > float(lam) > 1) or (is_exact(gamma, lam) and not gamma > lam > 1):
            raise errors.ExpansionTooWeak(
                f"branch {i + 1}: need base ratio {gamma} > fiber ratio {lam} > 1"
            )
        cells.append(((data.nodes[i][0], data.nodes[i + 1][0]),))
        bases.append(BaseBranch(i, gamma, ((ONE,),), (shift,)))
        fibers.append(FiberBranch(lam, ((ONE,),), ((a,),), (d,)))
    meta = {"family": "interpolation", "assignments": [list(p) for p in data.assignments]}
    if nodes_meta:
        meta["nodes"] = [[x, y] for x, y in data.nodes]
    return build_system(1, 1, cells, bases, fibers, meta)


def admissible_assignments(nodes, lambdas):
    """All ``(k_i, l_i)`` tuples satisfying the expansion constraint, in lexicographic order."""
    nodes = tuple((_num(x), _num(y)) for x, y in nodes)
    lambdas = tuple(_num(v) for v in lambdas)
    N = len(nodes) - 1
    per_branch = []
    for i in range(N):
        dx = nodes[i + 1][0] - nodes[i][0]
        opts = [
            (k, l)
            for k in range(N)
            for l in range(k + 1, N + 1)
            if float((nodes[l][0] - nodes[k][0]) / dx) > float(lambdas[i])
        ]
        per_branch.append(opts)
    return list(itertools.product(*per_branch))


def search_assignments(nodes, lambdas):
    """Dimension for every admissible assignment: list of ``(assignment, s0)``."""
    from .pressure import dimension_root

    out = []
    for assign in admissible_assignments(nodes, lambdas):
        system = interpolation_system(InterpolationData.create(nodes, assign, lambdas))
        out.append((assign, dimension_root(system).s0))
    return out


def preset_interpolation(preset: str = "T1") -> SkewSystem:
    try:
        assign = PRESET_ASSIGNMENTS[preset]
    except KeyError:
        raise errors.BadAssignment(f"unknown preset {preset!r}; choose from {sorted(PRESET_ASSIGNMENTS)}") from None
    return interpolation_system(InterpolationData.create(PRESET_NODES, assign, PRESET_LAMBDAS))


# --------------------------------------------------------------------------- beta-Takagi


def _check_takagi_params(beta, lam):
    if not float(beta) > 1:
        raise errors.NotExpanding(f"beta must exceed 1, got {beta}")
    if not 0 < float(lam) < 1:
        raise errors.NotExpanding(f"lambda must lie in (0, 1), got {lam}")
    prod = lam * beta
    if not float(prod) > 1 or (is_exact(prod) and not prod > 1):
        raise errors.DominationViolated(f"need lambda * beta > 1, got {float(prod):.6g}")


def _digit_cells(beta):
    """Intervals ``[i/beta, min((i+1)/beta, 1)]`` split at 1/2; returns (lo, hi, digit)."""
    n = math.ceil(float(beta)) if not is_exact(beta) else math.ceil(beta)
    out = []
    for i in range(n):
        lo = i / beta
        hi = (i + 1) / beta
        if float(hi) > 1 or (is_exact(hi) and hi > 1):
            hi = ONE if is_exact(beta) else 1.0
        if not float(lo) < float(hi):
            continue
        if float(lo) < 0.5 < float(hi):
            out.append((lo, HALF if is_exact(lo) else 0.5, i))
            out.append((HALF if is_exact(hi) else 0.5, hi, i))
        else:
            out.append((lo, hi, i))
    return out


def takagi_fiber(lower: bool, lam) -> FiberBranch:
    """``(y - x)/lambda`` on the lower half, ``(y + x - 1)/lambda`` on the upper half."""
    r = 1 / lam
    if lower:
        return FiberBranch(r, ((ONE,),), ((-r,),), (ZERO,))
    return FiberBranch(r, ((ONE,),), ((r,),), (-r,))


def takagi_system(beta, lam) -> SkewSystem:
    """beta-Takagi system; its repeller is the graph of ``sum lambda^n dist(f^n x, Z)``.

    The base is ``x -> beta x - i`` on the i-th digit cell, split at
    ``x = 1/2`` so the fiber slope is constant on every cell.  Zero-width
    pieces of the split are dropped.
    """
    beta, lam = _num(beta), _num(lam)
    _check_takagi_params(beta, lam)
    cells, bases, fibers = [], [], []
    for idx, (lo, hi, digit) in enumerate(_digit_cells(beta)):
        cells.append(((lo, hi),))
        bases.append(BaseBranch(idx, beta, ((ONE,),), (Fraction(-digit) if is_exact(beta) else float(-digit),)))
        fibers.append(takagi_fiber(float(hi) <= 0.5, lam))
    meta = {"family": "takagi", "beta": beta, "lambda": lam}
    return build_system(1, 1, cells, bases, fibers, meta)


def takagi_closed_form(beta, lam) -> float:
    """``2 + log(lambda) / log(beta)``."""
    beta, lam = float(_num(beta)), float(_num(lam))
    if not beta > 1 or not 0 < lam < 1:
        raise errors.ValidationError("need beta > 1 and 0 < lambda < 1")
    if not lam * beta > 1:
        raise errors.DominationViolated(f"need lambda * beta > 1, got {lam * beta:.6g}")
    return 2 + math.log(lam) / math.log(beta)


# --------------------------------------------------------------------------- multivariable Takagi


@dataclass(frozen=True)
class MultiTakagi:
    system: SkewSystem | None
    dimension: float
    betas: tuple
    lam: object
    notes: tuple = ()


def multivariable_closed_form(betas: Sequence[int], lam) -> float:
    lam = float(_num(lam))
    return len(betas) + 1 + math.log(lam) / math.log(max(betas))


def multivariable_takagi(betas: Sequence, lam) -> MultiTakagi:
    """Multivariable Takagi system over ``prod beta_i`` grid cells (split at 1/2).

    Returns the closed-form dimension ``d + 1 + log(lambda)/log(max beta)``.
    The skew system is built only when all ``beta_i`` agree, since otherwise
    the base is not a similitude; ``system`` is None in that case.
    """
    raw = [_num(b) for b in betas]
    if not raw:
        raise errors.ValidationError("need at least one coordinate")
    for b in raw:
        if not (is_exact(b) and b.denominator == 1):
            raise errors.NonIntegerBeta(f"beta entries must be integers, got {b}")
        if b < 2:
            raise errors.ValidationError(f"beta entries must be at least 2, got {b}")
    ints = tuple(int(b) for b in raw)
    lam = _num(lam)
    if not float(lam) < 1 or not float(lam) * max(ints) > 1:
        raise errors.DominationViolated(f"need 1/max(beta) < lambda < 1, got {lam}")
    dim = multivariable_closed_form(ints, lam)
    if len(set(ints)) > 1:
        return MultiTakagi(None, dim, ints, lam, ("non-conformal base: no skew system emitted",))
    beta = Fraction(ints[0])
    d = len(ints)
    per_axis = _digit_cells(beta)
    eye = tuple(tuple(ONE if r == c else ZERO for c in range(d)) for r in range(d))
    r = 1 / lam
    cells, bases, fibers = [], [], []
    for idx, combo in enumerate(itertools.product(per_axis, repeat=d)):
        box = tuple((lo, hi) for lo, hi, _ in combo)
        upper = [float(lo) >= 0.5 for lo, _, _ in combo]
        cells.append(box)
        bases.append(BaseBranch(idx, beta, eye, tuple(Fraction(-dig) for _, _, dig in combo)))
        coupling = (tuple(r if up else -r for up in upper),)
        fibers.append(FiberBranch(r, ((ONE,),), coupling, (-r * sum(upper),)))
    meta = {"family": "mtakagi", "betas": list(ints), "lambda": lam}
    system = build_system(d, 1, cells, bases, fibers, meta)
    return MultiTakagi(system, dim, ints, lam)
