"""Markov approximations.

``markov_subset`` extracts a Markov subsystem of ``f^k`` for a non-Markov
piecewise linear interval map; its pressure root bounds the dimension from
below.  ``qstep_bernoulli`` builds the q-step Bernoulli measures on loops
through a recurrent symbol, which approximate a Markov measure in entropy.
"""
from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import errors
from .core import (
    BaseBranch,
    FiberBranch,
    PartitionCell,
    SkewSystem,
    TransitionMatrix,
    as_matrix,
    count_words,
    is_exact,
    iter_words,
    word_budget,
)
from .pressure import DimensionReport, MeasureSpec, dimension_root, spectral_radius

FLOAT_TOL = 1e-12


@dataclass
class MarkovSubsystem:
    parent: SkewSystem
    k: int
    cells: list  # [(lo, hi)]
    words: list  # itinerary of length k for each cell
    transition: TransitionMatrix
    entropy: float
    system: SkewSystem
    refined_count: int
    retained_mass: float
    guaranteed_mass: float

    @property
    def size(self) -> int:
        return len(self.cells)


def _lt(a, b):
    if is_exact(a, b):
        return a < b
    return float(a) < float(b) - FLOAT_TOL


def _monotone_pieces(system: SkewSystem, k: int):
    """Monotonicity intervals of ``f^k`` as ``(lo, hi, a, b, word)`` with ``f^k = a x + b``."""
    cells = [(c.bounds[0][0], c.bounds[0][1]) for c in system.cells]
    maps = [(b.ratio * b.orth[0][0], b.shift[0]) for b, _ in system.branches]
    one = Fraction(1)
    cur = [(Fraction(0), one, one, Fraction(0), ())]
    for _ in range(k):
        nxt = []
        for lo, hi, a, b, w in cur:
            ilo, ihi = sorted((a * lo + b, a * hi + b), key=float)
            for sym, (clo, chi) in enumerate(cells):
                l = max(ilo, clo, key=float)
                h = min(ihi, chi, key=float)
                if not _lt(l, h):
                    continue
                p, q = sorted(((l - b) / a, (h - b) / a), key=float)
                ga, gb = maps[sym]
                nxt.append((p, q, ga * a, ga * b + gb, w + (sym,)))
                if len(nxt) > word_budget():
                    raise errors.BudgetExceeded("monotonicity partition exceeds the word budget")
        cur = nxt
    cur.sort(key=lambda t: float(t[0]))
    return cur


def _compose_fibers(system: SkewSystem, word):
    """Fiber of ``F^k`` along ``word`` (first letter applied first), for d = k = 1."""
    # track (x, z) -> (a x + v, c x + l z + t)
    a_tot, v_tot, c_tot, lam_tot, t_tot = 1, 0, 0, 1, 0
    for sym in word:
        b, g = system.branches[sym]
        ga, gv = b.ratio * b.orth[0][0], b.shift[0]
        A, L, T = g.coupling[0][0], g.ratio * g.orth[0][0], g.shift[0]
        # z' = A x_cur + L z_cur + T with x_cur = a_tot x + v_tot, z_cur = c_tot x + lam_tot z + t_tot
        c_tot, lam_tot, t_tot = A * a_tot + L * c_tot, L * lam_tot, A * v_tot + L * t_tot + T
        a_tot, v_tot = ga * a_tot, ga * v_tot + gv
    sign = 1 if float(lam_tot) > 0 else -1
    one = Fraction(1) if is_exact(lam_tot) else 1.0
    return FiberBranch(abs(lam_tot), ((one * sign,),), ((c_tot,),), (t_tot,))


def markov_subset(base: SkewSystem, k: int) -> MarkovSubsystem:
    """Markov subsystem of ``f^k`` for a piecewise linear expanding interval map.

    The monotonicity intervals of ``f^k`` are split dyadically until every
    piece is shorter than twice the shortest one.  In each piece ``J`` the
    largest subinterval mapped by ``f^k`` onto a union of pieces is kept and
    ``Q[J, J'] = 1`` when ``J'`` lies in the image of ``J``.  The guaranteed
    retained fraction per step is ``1 - 4 / N`` with ``N = (min gamma)^k``.
    """
    if base.d != 1:
        raise errors.DimensionMismatch("Markov subsets are built for interval bases (d = 1)")
    if k < 1:
        raise errors.ValidationError("k must be at least 1")
    N = float(np.min(base.gammas)) ** k
    if N <= 4:
        raise errors.TooShallow(f"(min gamma)^k = {N:.4g} <= 4; increase k")
    pieces = _monotone_pieces(base, k)
    shortest = min((hi - lo for lo, hi, *_ in pieces), key=float)
    refined = []
    for lo, hi, a, b, w in pieces:
        L = hi - lo
        n = 1
        while float(L / n) >= 2 * float(shortest) * (1 - 1e-15):
            n *= 2
        for t in range(n):
            refined.append((lo + L * t / n, lo + L * (t + 1) / n, a, b, w))
    refined.sort(key=lambda t: float(t[0]))
    exact = all(is_exact(r[0], r[1], r[2], r[3]) for r in refined)
    los = [r[0] for r in refined]
    his = [r[1] for r in refined]
    flos = [float(v) for v in los]
    fhis = [float(v) for v in his]
    keep, ranges = [], []
    for lo, hi, a, b, w in refined:
        ilo, ihi = sorted((a * lo + b, a * hi + b), key=float)
        if exact:
            first = bisect.bisect_left(los, ilo)
            last = bisect.bisect_right(his, ihi) - 1
        else:
            # only unambiguous inclusions count
            first = bisect.bisect_left(flos, float(ilo) + FLOAT_TOL)
            last = bisect.bisect_right(fhis, float(ihi) - FLOAT_TOL) - 1
        if first > last:
            continue
        l, h = los[first], his[last]
        p, q = sorted(((l - b) / a, (h - b) / a), key=float)
        keep.append((p, q, a, b, w, len(ranges)))
        ranges.append((first, last))
    if not keep:
        raise errors.TooShallow("no piece maps onto a union of pieces; increase k")
    # parent refined index of each kept cell
    parent = np.array([bisect.bisect_right(flos, float(p) + 0.5 * float(q - p)) - 1 for p, q, *_ in keep])
    rng = np.array(ranges)
    Q = ((parent[None, :] >= rng[:, :1]) & (parent[None, :] <= rng[:, 1:])).astype(np.int64)
    rho = spectral_radius(Q)
    entropy = math.log(rho) / k if rho > 0 else -math.inf
    cells, words, branches = [], [], []
    for idx, (p, q, a, b, w, _) in enumerate(keep):
        cells.append(PartitionCell(idx, ((p, q),)))
        words.append(w)
        one = Fraction(1) if is_exact(a) else 1.0
        sign = 1 if float(a) > 0 else -1
        bb = BaseBranch(idx, abs(a), ((one * sign,),), (b,))
        branches.append((bb, _compose_fibers(base, w)))
    retained = float(sum(q - p for p, q, *_ in keep))
    meta = {"family": "markov_subset", "k": k}
    embedded = SkewSystem(1, base.k, tuple(cells), tuple(branches), True, meta)
    return MarkovSubsystem(
        base, k, [(p, q) for p, q, *_ in keep], words, TransitionMatrix(Q), entropy, embedded,
        len(refined), retained, 1 - 4 / N,
    )


def _takagi_fibers(sub: MarkovSubsystem, lam):
    from .builders import takagi_fiber

    lower = []
    for c in sub.parent.cells:
        lo, hi = c.bounds[0]
        if float(hi) <= 0.5:
            lower.append(True)
        elif float(lo) >= 0.5:
            lower.append(False)
        else:
            raise errors.ValidationError("parent cells must not straddle x = 1/2")
    fibers = [takagi_fiber(flag, Fraction(lam) if not isinstance(lam, float) else lam) for flag in lower]
    proxy = SkewSystem(1, 1, sub.parent.cells, tuple((b, f) for (b, _), f in zip(sub.parent.branches, fibers)), False)
    branches = []
    for (bb, _), w in zip(sub.system.branches, sub.words):
        branches.append((bb, _compose_fibers(proxy, w)))
    return SkewSystem(1, 1, sub.system.cells, tuple(branches), True, sub.system.meta)


def subsystem_dimension(sub: MarkovSubsystem, lam=None) -> float:
    """Pressure root of the Markov subsystem of ``F^k``.

    With ``lam`` given the beta-Takagi fiber ``(y -/+ dist(x, Z)) / lam`` is
    attached to the parent cells first; otherwise the parent's fibers are used.
    """
    system = sub.system
    if lam is not None:
        if not float(lam) * float(np.min(sub.parent.gammas)) > 1:
            raise errors.DominationViolated("need lambda * (min base expansion) > 1")
        system = _takagi_fibers(sub, lam)
    return dimension_root(system, sub.transition).s0


def default_iterates(system: SkewSystem, count: int = 3, step: int = 2) -> list:
    g = float(np.min(system.gammas))
    k0 = max(1, math.floor(math.log(4) / math.log(g)) + 1)
    return [k0 + step * i for i in range(count)]


def approx_dimension(system: SkewSystem, ks=None) -> DimensionReport:
    """Largest Markov-subsystem root over the iterates ``ks`` (a lower bound that increases with k)."""
    if system.d != 1:
        raise errors.NotMarkov("non-Markov bases are only approximated for d = 1")
    ks = default_iterates(system) if ks is None else list(ks)
    best, notes = None, []
    for k in ks:
        sub = markov_subset(system, k)
        rep = dimension_root(sub.system, sub.transition)
        notes.append({"k": k, "cells": sub.size, "entropy": sub.entropy, "s_k": rep.s0})
        if best is None or rep.s0 > best.s0:
            best = rep
    return DimensionReport(best.s0, best.bracket, best.pressure_at_root, "markov_approx_supremum",
                           False, best.iterations, [], notes)


def convergence_table(system: SkewSystem, ks, lam=None) -> list:
    """Rows ``(k, entropy, s_k)`` for increasing iterates."""
    rows = []
    for k in ks:
        sub = markov_subset(system, k)
        rows.append((k, sub.entropy, subsystem_dimension(sub, lam)))
    return rows


# --------------------------------------------------------------------------- q-step Bernoulli


@dataclass
class LoopAlphabet:
    j: int
    q: int
    prefix: tuple
    suffix: tuple
    middle_length: int
    middles: list | None = None  # None when too many to enumerate

    @property
    def loops(self):
        if self.middles is None:
            return None
        return [self.prefix + w + self.suffix for w in self.middles]


def _is_recurrent(Qa, j) -> bool:
    M = Qa.shape[0]
    reach = Qa[j] > 0
    for _ in range(M):
        if reach[j]:
            return True
        reach = reach | ((reach.astype(np.int64) @ Qa) > 0)
    return bool(reach[j])


def _bool_power(Qa, n):
    out = np.eye(Qa.shape[0], dtype=bool)
    B = Qa > 0
    for _ in range(n):
        out = (out.astype(np.int64) @ B) > 0
    return out


def _cylinder_mass(mu: MeasureSpec, word) -> float:
    if mu.variant == "bernoulli":
        return float(np.prod([mu.p[s] for s in word]))
    if mu.variant == "markov":
        m = float(mu.stationary[word[0]])
        for a, b in zip(word, word[1:]):
            m *= float(mu.P[a, b])
        return m
    raise errors.ValidationError("base measure must be Bernoulli or Markov")


def loop_alphabet(Q, j: int, q: int, k: int, enumerate_middles: bool = True) -> LoopAlphabet:
    """Loops ``i1 + w + i2`` of length ``q`` through ``j`` with fixed paddings of length k.

    ``i1`` starts at ``j`` and ``i2`` ends in a symbol leading back to
    ``j``; both are the lexicographically least words that admit every
    admissible middle word ``w`` of length ``q - 2k``.  Middle words are
    listed only when their number fits the word budget.
    """
    Qa = as_matrix(Q).astype(np.int64)
    M = Qa.shape[0]
    if not 0 <= j < M:
        raise errors.ValidationError(f"symbol {j} outside the alphabet")
    if not q > 2 * k or k < 1:
        raise errors.ValidationError("need k >= 1 and q > 2k")
    if not _is_recurrent(Qa, j):
        raise errors.NotRecurrent(f"symbol {j} lies on no cycle")
    if not np.all(_bool_power(Qa, k)):
        raise errors.NotPrimitive(f"Q^{k} is not strictly positive")
    m = q - 2 * k
    reach = _bool_power(Qa, m - 1)
    firsts = np.flatnonzero(reach.any(axis=1)).tolist()
    lasts = np.flatnonzero(reach.any(axis=0)).tolist()
    prefix = next(
        (w for w in iter_words(Qa, k) if w[0] == j and all(Qa[w[-1], a] for a in firsts)),
        None,
    )
    suffix = next(
        (w for w in iter_words(Qa, k) if Qa[w[-1], j] and all(Qa[b, w[0]] for b in lasts)),
        None,
    )
    if prefix is None or suffix is None:
        raise errors.NotPrimitive(f"no padding of length {k} admits every middle word")
    middles = None
    if enumerate_middles and count_words(Qa, m) <= word_budget():
        middles = list(iter_words(Qa, m))
    return LoopAlphabet(j, q, prefix, suffix, m, middles)


def _stationary_law(mu: MeasureSpec):
    if mu.variant == "bernoulli":
        p = np.asarray(mu.p, dtype=float)
        return p, np.tile(p, (p.size, 1))
    if mu.variant == "markov":
        return np.asarray(mu.stationary, dtype=float), np.asarray(mu.P, dtype=float)
    raise errors.ValidationError("base measure must be Bernoulli or Markov")


def _block_entropy(pi, P, m):
    """Shannon entropy of the m-block law of a stationary chain: ``H(pi) + (m - 1) h``."""
    pos = pi[pi > 0]
    H0 = float(-(pos * np.log(pos)).sum())
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(P > 0, np.log(np.where(P > 0, P, 1.0)), 0.0)
    h = float(-(pi[:, None] * P * logs).sum())
    return H0 + (m - 1) * h


def qstep_bernoulli(Q, mu: MeasureSpec, j: int, q: int, k: int = 1) -> MeasureSpec:
    """q-step Bernoulli measure on loops through ``j`` with weights ``mu([w])`` of the middle words.

    The entropy is ``-(1/q) sum mu([w]) log mu([w])``, evaluated in closed form
    from the stationary chain of ``mu``.  The cell masses are the letter
    frequencies averaged over loops, i.e. those of the shift-invariant average.
    Loops and weights are attached when the middle words can be enumerated.
    """
    alpha = loop_alphabet(Q, j, q, k)
    pi, P = _stationary_law(mu)
    M = as_matrix(Q).shape[0]
    m = alpha.middle_length
    h = _block_entropy(pi, P, m) / q
    marginal = m * pi
    np.add.at(marginal, list(alpha.prefix + alpha.suffix), 1.0)
    marginal = marginal / q
    loops = weights = None
    if alpha.middles is not None:
        weights = np.array([_cylinder_mass(mu, w) for w in alpha.middles])
        loops = alpha.loops
    return MeasureSpec("qstep", marginal, h, j=j, q=q, loops=loops, weights=weights)
