"""Empirical side: attractor covers, graph sampling, box counting, Hölder exponents."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import errors
from .core import (
    SkewSystem,
    as_matrix,
    build_transition_matrix,
    compose_inverse,
    count_words,
    cylinder,
    cylinder_words,
    parse_number,
    word_budget,
)

HULL_TOL = 1e-9
HULL_MAXITER = 100_000
MIN_POINTS = 10_000
MIN_COVER_DEPTH = 6


# --------------------------------------------------------------------------- covers


def _box_image(L, t, lo, hi):
    """Hull of the image of boxes ``[lo, hi]`` under ``x -> L x + t`` (batched)."""
    c = 0.5 * (lo + hi)
    r = 0.5 * (hi - lo)
    cc = np.einsum("...ij,...j->...i", L, c) + t
    rr = np.einsum("...ij,...j->...i", np.abs(L), r)
    return cc - rr, cc + rr


def _branch_maps(system):
    inv = system.inverses
    L = np.stack([f.linear for f in inv])
    t = np.stack([np.asarray(f.shift, dtype=float) for f in inv])
    return L, t


def invariant_rectangle(system: SkewSystem, tol: float = HULL_TOL, maxiter: int = HULL_MAXITER):
    """Fixed rectangle of the hull map ``R -> hull(U_i F~_i(R))``.

    Starts from the unit cube times the zero fiber and iterates until the
    Hausdorff distance between successive rectangles drops below ``tol``.
    The result is widened by the remaining contraction tail so it contains
    the true fixed rectangle.  Returns ``(lo, hi)``.
    """
    d, k = system.d, system.k
    L, t = _branch_maps(system)
    lo = np.zeros(d + k)
    hi = np.concatenate([np.ones(d), np.zeros(k)])
    # fiber width contracts at least by this factor per step (sup norm)
    fib = np.abs(L[:, d:, d:]).sum(axis=2).max()
    for _ in range(maxiter):
        a, b = _box_image(L, t, lo[None, :], hi[None, :])
        nlo, nhi = a.min(axis=0), b.max(axis=0)
        step = max(np.abs(nlo - lo).max(), np.abs(nhi - hi).max())
        lo, hi = nlo, nhi
        if step < tol:
            break
    else:
        raise errors.NonConvergence(f"hull map did not settle within {maxiter} iterations")
    if fib < 1:
        pad = step * fib / (1 - fib)
        lo[d:] -= pad
        hi[d:] += pad
    return lo, hi


def _word_affines(system, Q, n, chunk=1 << 15):
    """Yield (linear parts, shifts, words) of ``F~_w`` for admissible n-words, lexicographic."""
    L, t = _branch_maps(system)
    Qb = np.asarray(Q).astype(bool)
    M = system.size

    def expand(mats, shifts, words, depth):
        if depth == n:
            yield mats, shifts, words
            return
        last = words[:, -1]
        parts = []
        for j in range(M):
            mask = Qb[last, j]
            if not mask.any():
                continue
            m = mats[mask]
            parts.append((m @ L[j], shifts[mask] + m @ t[j], np.hstack([words[mask], np.full((int(mask.sum()), 1), j)])))
        if not parts:
            return
        # keep lexicographic order: sort the merged block by word
        mats = np.concatenate([p[0] for p in parts])
        shifts = np.concatenate([p[1] for p in parts])
        words = np.concatenate([p[2] for p in parts])
        order = np.lexsort(words.T[::-1])
        mats, shifts, words = mats[order], shifts[order], words[order]
        for a in range(0, mats.shape[0], chunk):
            b = a + chunk
            yield from expand(mats[a:b], shifts[a:b], words[a:b], depth + 1)

    ids = np.arange(M)
    yield from expand(L, t, ids[:, None], 1)


@dataclass
class Cover:
    """Axis-parallel rectangles ``lo[j] <= x <= hi[j]`` indexed by admissible words."""

    lo: np.ndarray
    hi: np.ndarray
    words: list
    depth: int
    hull: tuple  # the invariant rectangle (lo, hi)

    def __len__(self) -> int:
        return self.lo.shape[0]

    @property
    def widths(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def area(self) -> float:
        return float(np.prod(self.widths, axis=1).sum())

    def contains(self, points, atol: float = 1e-9) -> np.ndarray:
        """Boolean mask: which points lie in at least one rectangle."""
        P = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(P.shape[0], dtype=bool)
        for a in range(0, len(self), 4096):
            lo, hi = self.lo[a : a + 4096], self.hi[a : a + 4096]
            inside = np.all((P[:, None, :] >= lo[None] - atol) & (P[:, None, :] <= hi[None] + atol), axis=2)
            out |= inside.any(axis=1)
        return out


def attractor_cover(system: SkewSystem, n: int, Q=None) -> Cover:
    """Rectangle hulls of ``F~_w(U)`` over admissible n-words ``w``.

    ``U`` is the invariant rectangle.  For non-Markov systems the words are
    the nonempty cylinders and the base side is clipped to the cylinder.
    """
    if n < 0:
        raise errors.ValidationError("depth must be nonnegative")
    ulo, uhi = invariant_rectangle(system)
    if n == 0:
        return Cover(ulo[None, :].copy(), uhi[None, :].copy(), [()], 0, (ulo, uhi))
    d = system.d
    los, his, words = [], [], []
    if Q is not None or system.markov:
        Qa = as_matrix(Q if Q is not None else build_transition_matrix(system))
        total = count_words(Qa, n)
        if total > word_budget():
            raise errors.BudgetExceeded(f"{total} words of length {n} exceed the budget {word_budget()}")
        for mats, shifts, w in _word_affines(system, Qa, n):
            a, b = _box_image(mats, shifts, ulo[None, :], uhi[None, :])
            los.append(a)
            his.append(b)
            words.extend(tuple(int(v) for v in row) for row in w)
    else:
        for w in cylinder_words(system, n):
            f = compose_inverse(system, w, check=False)
            a, b = _box_image(f.linear, np.asarray(f.shift, dtype=float), ulo, uhi)
            box = cylinder(system, w)
            a[:d] = np.maximum(a[:d], [float(lo) for lo, _ in box])
            b[:d] = np.minimum(b[:d], [float(hi) for _, hi in box])
            los.append(a[None])
            his.append(b[None])
            words.append(w)
    return Cover(np.concatenate(los), np.concatenate(his), words, n, (ulo, uhi))


# --------------------------------------------------------------------------- graphs


@dataclass
class GraphSample:
    xs: np.ndarray
    ys: np.ndarray
    error_bound: float
    method: str
    notes: list = field(default_factory=list)


def _dist_int(x):
    f = x - np.floor(x)
    return np.minimum(f, 1 - f)


def takagi_partial_sum(beta, lam, xs, N: int = 40):
    """``sum_{n<N} lam^n dist(f^n x, Z)`` with ``f(x) = beta x mod 1``, and the tail bound."""
    beta, lam = float(parse_number(beta)), float(parse_number(lam))
    if not 0 < lam < 1:
        raise errors.ValidationError(f"lambda must lie in (0, 1), got {lam}")
    if N < 1:
        raise errors.ValidationError("N must be at least 1")
    x = np.array(xs, dtype=float)
    y = np.zeros_like(x)
    w = 1.0
    for _ in range(N):
        y += w * _dist_int(x)
        x = beta * x
        x -= np.floor(x)
        w *= lam
    return y, 0.5 * lam**N / (1 - lam)


def takagi_surface(betas, lam, grids, N: int = 40):
    """``sum_i H_(beta_i, lam)(x_i)`` on the product of 1-D sample grids."""
    parts, err = [], 0.0
    for b, g in zip(betas, grids):
        y, e = takagi_partial_sum(b, lam, g, N)
        parts.append(y)
        err += e
    out = parts[0]
    for p in parts[1:]:
        out = np.add.outer(out, p)
    return out, err


def _locate(system, x):
    lows = np.array([float(c.bounds[0][0]) for c in system.cells])
    order = np.argsort(lows)
    idx = np.searchsorted(lows[order], x, side="right") - 1
    return order[np.clip(idx, 0, len(lows) - 1)]


def _linear_interpolant(system):
    nodes = system.meta.get("nodes") if system.meta else None
    if not nodes:
        return lambda x: np.zeros_like(x)
    nx = np.array([float(parse_number(a)) for a, _ in nodes])
    ny = np.array([float(parse_number(b)) for _, b in nodes])
    return lambda x: np.interp(x, nx, ny)


def sample_graph(source, xs, N: int = 40) -> GraphSample:
    """Evaluate the invariant graph at ``xs``.

    ``source`` is a ``(beta, lam)`` pair, a Takagi-family system, or any
    system with ``d = k = 1``.  The general route unrolls the functional
    equation ``G(x) = o (G(f_i x) - a_i x - t_i) / lam_i`` along the orbit of
    ``x`` for ``N`` steps, starting from the linear interpolant of the nodes
    stored in the system metadata (zero when there are none).
    """
    if N < 1:
        raise errors.ValidationError("N must be at least 1")
    xs = np.asarray(xs, dtype=float)
    if isinstance(source, tuple):
        beta, lam = source
        y, err = takagi_partial_sum(beta, lam, xs, N)
        return GraphSample(xs, y, err, "partial_sum")
    system = source
    meta = system.meta or {}
    if meta.get("family") == "takagi":
        y, err = takagi_partial_sum(meta["beta"], meta["lambda"], xs, N)
        return GraphSample(xs, y, err, "partial_sum")
    return _functional_iteration(system, xs, N)


def _functional_iteration(system, xs, N):
    if system.d != 1 or system.k != 1:
        raise errors.ValidationError("graph sampling needs d = k = 1")
    gam = system.gammas
    lam = system.lambdas
    so = np.array([float(b.orth[0][0]) for b, _ in system.branches])
    sh = np.array([float(b.shift[0]) for b, _ in system.branches])
    fo = np.array([float(g.orth[0][0]) for _, g in system.branches])
    fa = np.array([float(g.coupling[0][0]) for _, g in system.branches])
    ft = np.array([float(g.shift[0]) for _, g in system.branches])
    G0 = _linear_interpolant(system)

    def step(x):
        i = _locate(system, x)
        fx = np.clip(gam[i] * so[i] * x + sh[i], 0.0, 1.0)
        return i, fx

    # y = sum_n  c_n * (-(a x_n + t)/lam) + c_N G0(x_N), c_n = prod_{m<n} o/lam
    x = xs.copy()
    y = np.zeros_like(x)
    coef = np.ones_like(x)
    for _ in range(N):
        i, fx = step(x)
        y += coef * fo[i] * (-(fa[i] * x + ft[i]) / lam[i])
        coef = coef * fo[i] / lam[i]
        x = fx
    y += coef * G0(x)
    # size of one application of the operator to G0, as a proxy for sup|G - G0|
    i, fx = step(xs)
    defect = float(np.max(np.abs(fo[i] * (G0(fx) - fa[i] * xs - ft[i]) / lam[i] - G0(xs)))) if xs.size else 0.0
    c = float(np.max(1 / lam))
    err = c**N * defect / (1 - c)
    return GraphSample(xs, y, err, "functional_iteration", ["error bound uses the sampled defect of the initial guess"])


# --------------------------------------------------------------------------- box counting


@dataclass
class BoxCountResult:
    scales: np.ndarray
    counts: np.ndarray
    slope: float
    intercept: float
    r2: float
    window: tuple
    mode: str = "points"

    def to_dict(self) -> dict:
        return {
            "scales": self.scales.tolist(),
            "counts": self.counts.tolist(),
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r2,
            "window": list(self.window),
            "mode": self.mode,
        }

    def csv(self) -> str:
        rows = ["scale,count"] + [f"{e:.10g},{int(c)}" for e, c in zip(self.scales, self.counts)]
        return "\n".join(rows) + "\n"


def _normalizer(lo, hi):
    ext = float(np.max(hi - lo))
    return lo, (ext if ext > 0 else 1.0)


def _count_points(P, eps):
    idx = np.floor(P / eps).astype(np.int64)
    return int(np.unique(idx, axis=0).shape[0])


def _count_graph(P, eps):
    """Grid boxes met by the polyline through ``P`` (sorted by x), column by column."""
    x, y = P[:, 0], P[:, 1]
    nxt = np.r_[y[1:], y[-1]]
    lo = np.minimum(y, nxt)
    hi = np.maximum(y, nxt)
    col = np.floor(x / eps).astype(np.int64)
    cols, inv = np.unique(col, return_inverse=True)
    mn = np.full(cols.size, np.inf)
    mx = np.full(cols.size, -np.inf)
    np.minimum.at(mn, inv, lo)
    np.maximum.at(mx, inv, hi)
    return int((np.floor(mx / eps) - np.floor(mn / eps) + 1).sum())


def _count_cover(lo, hi, eps):
    a = np.floor(lo / eps).astype(np.int64)
    b = np.floor(hi / eps).astype(np.int64)
    span = b - a + 1
    sizes = np.prod(span, axis=1)
    total = int(sizes.sum())
    if total > word_budget():
        raise errors.BudgetExceeded(f"{total} grid boxes at scale {eps:g} exceed the budget")
    # enumerate every (rectangle, cell) pair by mixed-radix offsets
    owner = np.repeat(np.arange(lo.shape[0]), sizes)
    off = np.arange(total) - np.repeat(np.cumsum(sizes) - sizes, sizes)
    cells = np.empty((total, lo.shape[1]), dtype=np.int64)
    for j in range(lo.shape[1] - 1, -1, -1):
        s = span[owner, j]
        cells[:, j] = a[owner, j] + off % s
        off //= s
    cells -= cells.min(axis=0)
    keys = np.ravel_multi_index(cells.T, tuple(cells.max(axis=0) + 1))
    return int(np.unique(keys).size)


def _default_window(m):
    a = int(round(m * 0.2))
    b = int(round(m * 0.8))
    return a, max(b, a + 1)


def box_count_dimension(data, scales=None, window=None, mode: str | None = None) -> BoxCountResult:
    """Least-squares slope of ``log N(eps)`` against ``log(1/eps)`` on dyadic grids.

    ``data`` is an ``(n, D)`` point array or a :class:`Cover`.  The set is
    rescaled isotropically into the unit cube first.  ``mode="graph"``
    treats the points as samples of a continuous graph over a sorted first
    coordinate and counts the boxes met by their polyline.  ``window`` is a
    half-open index range into ``scales``; the default keeps the middle
    three fifths.
    """
    if isinstance(data, Cover):
        if data.depth < MIN_COVER_DEPTH:
            raise errors.ValidationError(f"cover depth must be at least {MIN_COVER_DEPTH}")
        lo0, ext = _normalizer(data.lo.min(axis=0), data.hi.max(axis=0))
        clo, chi = (data.lo - lo0) / ext, (data.hi - lo0) / ext
        mode = "cover"
        finest = float(np.median(np.min(chi - clo, axis=1)))
        top = max(5, int(math.floor(-math.log2(max(finest, 1e-12)))) + 1)
    else:
        P = np.asarray(data, dtype=float)
        if P.ndim != 2 or P.shape[0] < MIN_POINTS:
            raise errors.ValidationError(f"need an (n, D) array with n >= {MIN_POINTS}")
        mode = mode or "points"
        if mode not in ("points", "graph"):
            raise errors.ValidationError(f"unknown mode {mode!r}")
        lo0, ext = _normalizer(P.min(axis=0), P.max(axis=0))
        P = (P - lo0) / ext
        if mode == "graph":
            P = P[np.argsort(P[:, 0], kind="stable")]
        top = int(math.log2(P.shape[0])) - 3
    if scales is None:
        scales = [2.0**-m for m in range(1, top + 1)]
    scales = np.asarray(sorted((float(e) for e in scales), reverse=True))
    if scales.size < 5:
        raise errors.ValidationError("need at least 5 scales")
    counts = []
    for eps in scales:
        if mode == "cover":
            counts.append(_count_cover(clo, chi, eps))
        elif mode == "graph":
            counts.append(_count_graph(P, eps))
        else:
            counts.append(_count_points(P, eps))
    counts = np.asarray(counts, dtype=np.int64)
    a, b = window if window is not None else _default_window(scales.size)
    if not (0 <= a < b <= scales.size):
        raise errors.ValidationError(f"window {window} out of range for {scales.size} scales")
    X = np.log(1 / scales[a:b])
    Y = np.log(counts[a:b].astype(float))
    if np.unique(counts[a:b]).size < 3:
        raise errors.DegenerateFit("fewer than 3 distinct counts in the regression window")
    slope, intercept = np.polyfit(X, Y, 1)
    resid = Y - (slope * X + intercept)
    ss = float(((Y - Y.mean()) ** 2).sum())
    r2 = 1 - float((resid**2).sum()) / ss if ss > 0 else 1.0
    return BoxCountResult(scales, counts, float(slope), float(intercept), r2, (a, b), mode)


# --------------------------------------------------------------------------- Hölder exponent


@dataclass
class HolderEstimate:
    exponent: float
    lags: np.ndarray
    oscillations: np.ndarray
    statistic: str


def holder_estimate(xs, ys, lags=None, statistic: str = "max") -> HolderEstimate:
    """Slope of ``log osc(h)`` against ``log h`` over dyadic lags.

    ``osc(h)`` is ``max |y(x + h) - y(x)|`` by default; ``statistic`` may
    also be a quantile in (0, 1), which tolerates isolated jumps.  ``lags``
    are integer multiples of the grid spacing; the default runs over
    ``4, 8, ...`` up to ``n / 64``.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 16:
        raise errors.ValidationError("need matching 1-D arrays with at least 16 samples")
    dx = np.diff(xs)
    if not np.allclose(dx, dx[0], rtol=1e-9, atol=0):
        raise errors.ValidationError("samples must lie on a uniform grid")
    n = xs.size
    if lags is None:
        top = max(int(math.log2(n)) - 6, 4)
        lags = [2**j for j in range(2, top + 1)]
    lags = np.asarray([int(h) for h in lags if 0 < int(h) < n])
    if lags.size < 3:
        raise errors.DegenerateFit("need at least 3 usable lags")
    osc = []
    for h in lags:
        diff = np.abs(ys[h:] - ys[:-h])
        if statistic == "max":
            osc.append(diff.max())
        else:
            q = float(statistic)
            if not 0 < q < 1:
                raise errors.ValidationError("quantile statistic must lie in (0, 1)")
            osc.append(np.quantile(diff, q))
    osc = np.asarray(osc)
    if np.any(osc <= 0) or np.unique(osc).size < 3:
        raise errors.DegenerateFit("oscillations vanish or do not vary across lags")
    slope = np.polyfit(np.log(lags * dx[0]), np.log(osc), 1)[0]
    return HolderEstimate(float(slope), lags, osc, str(statistic))
