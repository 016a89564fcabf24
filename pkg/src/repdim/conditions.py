"""Checks of the hypotheses under which the pressure root is the Hausdorff dimension.

* direction slopes and the non-diagonality witness search (``d = k = 1``)
* the induced similarity IFS acting on fiber directions
* finite-horizon separation evidence for similarity IFSs
* base transitivity, and a router assembling a :class:`HypothesisReport`

Everything here is evidence on a finite horizon.  Nothing certifies an
asymptotic separation property.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from . import errors
from .core import (
    SkewSystem,
    _affine_box,
    _box_has_interior,
    _box_inside,
    _box_intersection,
    _image_of_cylinder,
    _signed_permutation,
    _transition_matrix,
    as_matrix,
    cylinder,
    cylinder_words,
    is_exact,
    iter_words,
    word_budget,
)

TIE_TOL = 1e-10
DEFAULT_HORIZON = 12
MAX_POINTS = 1 << 21


def _exact_all(*vals) -> bool:
    return all(isinstance(v, Fraction) for v in vals)


def _eq(a, b) -> bool:
    if _exact_all(a, b):
        return a == b
    return abs(float(a) - float(b)) <= TIE_TOL * max(1.0, abs(float(a)), abs(float(b)))


# --------------------------------------------------------------------------- interval derivatives


def _require_planar(system):
    if system.d != 1 or system.k != 1:
        raise errors.DimensionMismatch(f"needs d = k = 1, got d={system.d}, k={system.k}")


def branch_derivative(system: SkewSystem, i: int):
    """``(f', d1 g, d2 g)`` of branch ``i`` with orientation signs, exact when possible."""
    b, g = system.branches[i]
    return b.ratio * b.orth[0][0], g.coupling[0][0], g.ratio * g.orth[0][0]


def word_derivative(system: SkewSystem, word):
    """Derivative of ``F^n`` along ``word`` as ``(f', d1 g, d2 g)``.

    Lower triangular matrices compose as
    ``[[a,0],[c,b]] [[a',0],[c',b']] = [[a a', 0], [c a' + b c', b b']]``,
    with the first letter applied first.
    """
    fa, c, gb = 1, 0, 1
    for sym in word:
        a2, c2, b2 = branch_derivative(system, sym)
        # new = D_sym @ current
        fa, c, gb = a2 * fa, c2 * fa + b2 * c, b2 * gb
    return fa, c, gb


def _slope(fd, c, gb):
    den = fd - gb
    if (isinstance(den, Fraction) and den == 0) or float(den) == 0:
        raise errors.DegenerateDenominator("base and fiber derivatives coincide")
    return c / den


def has_fixed_point(system: SkewSystem, word) -> bool:
    """True when ``f_word`` has a fixed point in the closure of its cylinder."""
    word = tuple(word)
    if not word:
        return False
    if system.markov:
        Q = as_matrix(_transition_matrix(system))
        return all(Q[a, b] for a, b in zip(word, word[1:])) and bool(Q[word[-1], word[0]])
    box = cylinder(system, word)
    if box is None:
        return False
    return _box_inside(box, _image_of_cylinder(system, word, box))


def eigen_direction(system: SkewSystem, word, check: bool = True):
    """Slope ``d1 g / (f' - d2 g)`` of the expanding eigenvector along a periodic word."""
    _require_planar(system)
    word = tuple(word)
    if check and not has_fixed_point(system, word):
        raise errors.EmptyCylinder(f"word {word} is not cyclically admissible")
    return _slope(*word_derivative(system, word))


def transported_value(system: SkewSystem, iword, hword):
    """Connecting-word expression compared against the target slope.

    ``((f'_i - d2g_i) d1g_h + f'_h d2g_h d1g_i) / (f'_h (f'_i - d2g_i))``
    """
    fi, ci, gi = word_derivative(system, iword)
    fh, ch, gh = word_derivative(system, hword)
    den = fh * (fi - gi)
    return ((fi - gi) * ch + fh * gh * ci) / den


def pushed_slope(system: SkewSystem, iword, hword):
    """Slope of ``DF_h`` applied to the eigenvector of ``iword``."""
    fh, ch, gh = word_derivative(system, hword)
    return (ch + gh * _slope(*word_derivative(system, iword))) / fh


@dataclass
class NondiagonalVerdict:
    holds: bool
    depth: int
    witness: Optional[dict] = None

    def to_dict(self):
        out = {"holds": self.holds, "depth": self.depth}
        if self.witness is not None:
            out["witness"] = self.witness
        else:
            out["status"] = f"not found up to depth {self.depth}"
        return out


def _cyclic_words(system, L):
    out = []
    for n in range(1, L + 1):
        for w in _words(system, n):
            if has_fixed_point(system, w):
                out.append(w)
    return out


def _words(system, n):
    if system.markov:
        return iter_words(_transition_matrix(system), n)
    return cylinder_words(system, n)


def essentially_nondiagonal(system: SkewSystem, Q=None, depth: int = 4) -> NondiagonalVerdict:
    """Search for periodic words ``i != j`` and a connecting word ``h`` witnessing non-diagonality.

    Candidates are scanned in (length, lexicographic) order: ``i`` first, then
    ``j``, then ``h`` with ``|h| >= 1``.  A witness needs distinct slopes for
    ``i`` and ``j`` and a connecting-word value (see :func:`transported_value`)
    different from the slope of ``j``, with ``i h j`` admissible.  Float ties
    within 1e-10 do not count.
    """
    _require_planar(system)
    if depth < 1:
        raise errors.ValidationError("depth must be at least 1")
    cyc = _cyclic_words(system, depth)
    slopes = {w: eigen_direction(system, w, check=False) for w in cyc}
    hs = [w for n in range(1, depth + 1) for w in _words(system, n)]
    Qa = as_matrix(_transition_matrix(system)) if system.markov else None
    for iw in cyc:
        for jw in cyc:
            if iw == jw or _eq(slopes[iw], slopes[jw]):
                continue
            for hw in hs:
                if Qa is not None:
                    if not (Qa[iw[-1], hw[0]] and Qa[hw[-1], jw[0]]):
                        continue
                elif cylinder(system, iw + hw + jw) is None:
                    continue
                val = transported_value(system, iw, hw)
                if _eq(val, slopes[jw]):
                    continue
                return NondiagonalVerdict(
                    True,
                    depth,
                    {
                        "i": list(iw),
                        "j": list(jw),
                        "h": list(hw),
                        "slope_i": slopes[iw],
                        "slope_j": slopes[jw],
                        "connecting_value": val,
                        "pushed_slope": pushed_slope(system, iw, hw),
                    },
                )
    return NondiagonalVerdict(False, depth)


# --------------------------------------------------------------------------- similarity IFS


def _matmul(A, B):
    return tuple(tuple(sum(A[r][t] * B[t][c] for t in range(len(B))) for c in range(len(B[0]))) for r in range(len(A)))


def _transpose(A):
    return tuple(tuple(A[r][c] for r in range(len(A))) for c in range(len(A[0])))


def _kron(A, B):
    n, m = len(A), len(B)
    return tuple(
        tuple(A[r // m][c // m] * B[r % m][c % m] for c in range(n * m)) for r in range(n * m)
    )


def _matvec(A, x):
    return tuple(sum(A[r][c] * x[c] for c in range(len(x))) for r in range(len(A)))


@dataclass(frozen=True, eq=False)
class SimilarityIFS:
    """Maps ``x -> r_i O_i x + t_i``; entries stay exact when the input is rational."""

    ratios: tuple
    orths: tuple
    translations: tuple
    kind: str = "similarity"

    @property
    def size(self) -> int:
        return len(self.ratios)

    @property
    def dim(self) -> int:
        return len(self.translations[0])

    @property
    def linear(self) -> np.ndarray:
        return np.array(
            [float(r) * np.array([[float(v) for v in row] for row in O]) for r, O in zip(self.ratios, self.orths)]
        )

    @property
    def shifts(self) -> np.ndarray:
        return np.array([[float(v) for v in t] for t in self.translations])

    def apply(self, i: int, x):
        x = np.asarray(x, dtype=float)
        return x @ self.linear[i].T + self.shifts[i]

    def compose_point(self, word, x=None):
        """``h_(w0) o ... o h_(w(n-1))(x)``, exact when the entries are."""
        if x is None:
            x = tuple(Fraction(0) for _ in range(self.dim))
        for sym in reversed(tuple(word)):
            r, O, t = self.ratios[sym], self.orths[sym], self.translations[sym]
            Ox = _matvec(O, x)
            x = tuple(r * a + b for a, b in zip(Ox, t))
        return x

    def fixed_point(self, i: int):
        """Solve ``(I - r O) x = t`` exactly when possible."""
        n = self.dim
        r, O, t = self.ratios[i], self.orths[i], self.translations[i]
        M = [[(1 if a == b else 0) - r * O[a][b] for b in range(n)] + [t[a]] for a in range(n)]
        return tuple(_gauss(M))


def _gauss(M):
    n = len(M)
    exact = all(isinstance(v, (Fraction, int)) for row in M for v in row)
    if not exact:
        A = np.array([[float(v) for v in row] for row in M])
        return np.linalg.solve(A[:, :n], A[:, n]).tolist()
    M = [[Fraction(v) for v in row] for row in M]
    for col in range(n):
        piv = next(r for r in range(col, n) if M[r][col] != 0)
        M[col], M[piv] = M[piv], M[col]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col] / M[col][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[col])]
    return [M[r][n] / M[r][r] for r in range(n)]


def furstenberg_ifs(system: SkewSystem) -> SimilarityIFS:
    """Similarity IFS on ``R^(dk)`` describing how ``DF_i`` moves graph directions.

    A ``d``-dimensional graph direction is stored as the column stack of a
    ``k x d`` matrix ``X``.  ``DF_i`` sends it to
    ``(lambda/gamma) O X U^T + A U^T / gamma`` so the map has ratio
    ``lambda_i / gamma_i < 1``, orthogonal part ``U ⊗ O`` (Kronecker) and
    translation ``vec(A U^T) / gamma``.
    """
    ratios, orths, trans = [], [], []
    for b, g in system.branches:
        U, O, A = b.orth, g.orth, g.coupling
        ratios.append(g.ratio / b.ratio)
        orths.append(_kron(U, O))
        AU = _matmul(A, _transpose(U))  # k x d
        vec = tuple(AU[r][c] / b.ratio for c in range(system.d) for r in range(system.k))
        trans.append(vec)
    return SimilarityIFS(tuple(ratios), tuple(orths), tuple(trans), "furstenberg")


def fiber_ifs(system: SkewSystem) -> SimilarityIFS:
    """Inverse fiber maps ``z -> O^T (z - t) / lambda`` (meaningful for uncoupled fibers)."""
    ratios, orths, trans = [], [], []
    for _, g in system.branches:
        Ot = _transpose(g.orth)
        ratios.append(1 / g.ratio)
        orths.append(Ot)
        trans.append(tuple(-v / g.ratio for v in _matvec(Ot, g.shift)))
    return SimilarityIFS(tuple(ratios), tuple(orths), tuple(trans), "fiber_inverse")


def furstenberg_direction(source, word):
    """``h_(w0) o ... o h_(w(n-1))(0)`` for an IFS or a system (its direction IFS)."""
    ifs = furstenberg_ifs(source) if isinstance(source, SkewSystem) else source
    if len(tuple(word)) < 1:
        raise errors.ValidationError("word must be nonempty")
    return ifs.compose_point(word)


# --------------------------------------------------------------------------- separation evidence


def min_pairwise_distance(points: np.ndarray) -> float:
    pts = np.asarray(points, dtype=float)
    if pts.shape[0] < 2:
        return math.inf
    if pts.shape[1] == 1:
        v = np.sort(pts[:, 0])
        return float(np.min(np.diff(v)))
    tree = cKDTree(pts)
    dist, _ = tree.query(pts, k=2)
    return float(dist[:, 1].min())


def _subspace_key(P):
    return tuple(np.round(P, 9).ravel().tolist())


def _orbit_of_subspaces(orths, bound: int):
    """Look for a finite collection of coordinate-subspace orbits closed under the group.

    Returns ``"finite_invariant_collection_found"`` or ``"none_up_to_bound"``.
    """
    n = orths[0].shape[0]
    gens = list(orths) + [O.T for O in orths]
    for dim in range(1, n):
        for axes in itertools.combinations(range(n), dim):
            E = np.zeros((n, dim))
            for c, a in enumerate(axes):
                E[a, c] = 1.0
            P0 = E @ E.T
            seen = {_subspace_key(P0): P0}
            frontier = [P0]
            for _ in range(bound):
                new = []
                for P in frontier:
                    for O in gens:
                        Pn = O @ P @ O.T
                        key = _subspace_key(Pn)
                        if key not in seen:
                            seen[key] = Pn
                            new.append(Pn)
                if not new:
                    return "finite_invariant_collection_found"
                frontier = new
                if len(seen) > 10_000:
                    break
    return "none_up_to_bound"


@dataclass
class HescEvidence:
    horizon: int
    separations: list
    normalized_logs: list
    common_fixed_point: bool
    fixed_points: list
    irreducibility: str
    passes: bool
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "label": "evidence only; finite horizon",
            "horizon": self.horizon,
            "separations": self.separations,
            "normalized_logs": self.normalized_logs,
            "common_fixed_point": self.common_fixed_point,
            "fixed_points": self.fixed_points,
            "irreducibility": self.irreducibility,
            "passes": self.passes,
            "notes": self.notes,
        }


def hesc_report(ifs: SimilarityIFS, N: int = DEFAULT_HORIZON, orbit_bound: int = 8,
                max_points: int = MAX_POINTS) -> HescEvidence:
    """Finite-horizon separation evidence for a similarity IFS.

    (a) ``Delta_n``, the least distance between ``h_w(0)`` over distinct
    n-words, with ``log(Delta_n)/n``; (b) an exact test for a common fixed
    point; (c) for ambient dimension at least 2, a search for a finite
    collection of subspaces permuted by the orthogonal parts.
    """
    if any(not float(r) < 1 for r in ifs.ratios):
        raise errors.ValidationError("all ratios must be below 1")
    M = ifs.size
    max_points = min(max_points, word_budget())
    if M > max_points:
        raise errors.BudgetExceeded(f"{M} maps exceed the point budget {max_points}")
    notes = []
    L, T = ifs.linear, ifs.shifts
    pts = np.zeros((1, ifs.dim))
    seps, logs = [], []
    scale = max(1.0, float(np.abs(T).max()) / (1 - max(float(r) for r in ifs.ratios)))
    for n in range(1, N + 1):
        if pts.shape[0] * M > max_points:
            notes.append(f"horizon truncated at n={n - 1} ({max_points} point cap)")
            break
        # level n: h_i applied to level n-1 points
        pts = np.concatenate([pts @ L[i].T + T[i] for i in range(M)])
        delta = min_pairwise_distance(pts)
        if delta <= 1e-13 * scale:
            delta = 0.0
        seps.append(delta)
        logs.append(math.log(delta) / n if delta > 0 else -math.inf)
    fps = [ifs.fixed_point(i) for i in range(M)]
    if all(_exact_all(*fp) for fp in fps):
        common = all(fp == fps[0] for fp in fps)
    else:
        arr = np.array([[float(v) for v in fp] for fp in fps])
        common = bool(np.max(np.abs(arr - arr[0])) <= TIE_TOL)
    if ifs.dim < 2:
        irr = "vacuous"
    else:
        orths = [np.array([[float(v) for v in row] for row in O]) for O in ifs.orths]
        irr = _orbit_of_subspaces(orths, orbit_bound)
    passes = all(s > 0 for s in seps) and not common and irr != "finite_invariant_collection_found"
    return HescEvidence(len(seps), seps, logs, common, [list(fp) for fp in fps], irr, passes, notes)


def furstenberg_dimension(ifs: SimilarityIFS, p) -> float:
    """Similarity-dimension formula ``min(dim, H(p) / -sum p log r)`` (reported, not certified)."""
    p = np.asarray(p, dtype=float)
    r = np.array([float(v) for v in ifs.ratios])
    H = float(-(p[p > 0] * np.log(p[p > 0])).sum())
    return min(float(ifs.dim), H / float(-(p * np.log(r)).sum()))


# --------------------------------------------------------------------------- transitivity


def _merge(intervals):
    out = []
    for lo, hi in sorted(intervals, key=lambda t: (float(t[0]), float(t[1]))):
        if out and float(lo) <= float(out[-1][1]):
            if float(hi) > float(out[-1][1]):
                out[-1] = (out[-1][0], hi)
        else:
            out.append((lo, hi))
    return out


def _interval_image(system, intervals):
    out = []
    for lo, hi in intervals:
        for c, (b, _) in zip(system.cells, system.branches):
            clo, chi = c.bounds[0]
            a, z = max(lo, clo, key=float), min(hi, chi, key=float)
            if float(a) < float(z):
                out.append(_affine_box(b.ratio, _signed_permutation(b.orth), b.shift, ((a, z),))[0])
    return _merge(out)


def transitivity(system: SkewSystem, max_steps: int = 64) -> dict:
    """Markov bases: irreducibility of ``Q``.  Interval bases: every cell eventually covers ``[0, 1]``."""
    if system.markov:
        from .pressure import _components

        Q = as_matrix(_transition_matrix(system))
        n, _ = _components(Q)
        return {"method": "transition_matrix_irreducible", "holds": bool(n == 1)}
    if system.d != 1:
        return {"method": "none", "holds": False, "note": "non-Markov base with d > 1 is not checked"}
    worst = 0
    for c in system.cells:
        cur = [c.bounds[0]]
        for step in range(1, max_steps + 1):
            cur = _interval_image(system, cur)
            if len(cur) == 1 and float(cur[0][0]) <= 0 and float(cur[0][1]) >= 1:
                worst = max(worst, step)
                break
        else:
            return {"method": "eventually_onto", "holds": False, "steps": max_steps}
    return {"method": "eventually_onto", "holds": True, "steps": worst}


def sosc_standin(system: SkewSystem) -> dict:
    """Pairwise interior-disjointness of the first-level cylinder base boxes.

    Stand-in for the strong open set condition, which is not checked as such.
    """
    cells = [c.bounds for c in system.cells]
    clash = [
        (i, j)
        for i, j in itertools.combinations(range(len(cells)), 2)
        if _box_has_interior(_box_intersection(cells[i], cells[j]))
    ]
    return {"holds": not clash, "stand_in": True, "overlapping": [list(p) for p in clash]}


# --------------------------------------------------------------------------- report


@dataclass
class HypothesisReport:
    theorem: Optional[str]
    verified: bool
    checks: dict
    justification: list
    s0: float

    def to_dict(self):
        return {
            "theorem": self.theorem,
            "verified": self.verified,
            "s0": self.s0,
            "checks": self.checks,
            "justification": self.justification,
        }


def justify_dimension(system: SkewSystem, Q=None, s0: float | None = None, depth: int = 4,
                      horizon: int = DEFAULT_HORIZON) -> HypothesisReport:
    """Route the system to the theorem whose hypotheses can be checked and run the checks.

    * uncoupled fibers: separation evidence for the inverse fiber maps
      (``diagonal_interval`` for non-Markov ``d = k = 1``, ``diagonal_markov``)
    * coupled, ``d = k = 1``: non-diagonality witness and a transitive base
      (``triangular_interval``)
    * coupled Markov, ``k = 1``, ``d >= 2``: separation evidence for the
      direction IFS and the gate ``s0 > (d + 2) k / 2`` (``triangular_markov``)
    """
    if s0 is None:
        from .pressure import dimension_root

        s0 = dimension_root(system, Q).s0
    d, k = system.d, system.k
    checks: dict = {"sosc": sosc_standin(system)}
    theorem = None
    ok = False
    if system.diagonal:
        theorem = "diagonal_markov" if system.markov else "diagonal_interval"
        if not system.markov and (d != 1 or k != 1):
            theorem = None
            checks["routing"] = "non-Markov uncoupled systems are covered only for d = k = 1"
        ev = hesc_report(fiber_ifs(system), horizon)
        checks["hesc"] = ev.to_dict()
        ok = theorem is not None and ev.passes
    elif d == 1 and k == 1:
        theorem = "triangular_interval"
        nd = essentially_nondiagonal(system, Q, depth)
        tr = transitivity(system)
        checks["nondiagonal"] = nd.to_dict()
        checks["transitivity"] = tr
        ok = nd.holds and tr["holds"]
    elif system.markov and k == 1:
        theorem = "triangular_markov"
        ifs = furstenberg_ifs(system)
        ev = hesc_report(ifs, horizon)
        gate = (d + 2) * k / 2
        checks["hesc"] = ev.to_dict()
        checks["gate"] = {"s0": s0, "threshold": gate, "holds": bool(s0 > gate)}
        if d >= 2:
            checks["gate"]["note"] = "implied by s0 > d for k = 1, d >= 2"
        if ev.passes:
            from .pressure import potential_weights

            w = potential_weights(system, s0)
            Qa = as_matrix(_transition_matrix(system))
            if np.all(Qa == 1):
                checks["furstenberg_dimension"] = furstenberg_dimension(ifs, w / w.sum())
        ok = ev.passes and s0 > gate
    else:
        checks["routing"] = "no checkable theorem for this configuration"
    failing = [name for name, c in checks.items() if isinstance(c, dict) and c.get("holds") is False]
    if "hesc" in checks and not checks["hesc"]["passes"]:
        failing.append("hesc")
    status = "verified" if ok else "unverified"
    justification = [{"theorem": theorem, "status": status, "failing": failing}]
    return HypothesisReport(theorem, ok, checks, justification, float(s0))
