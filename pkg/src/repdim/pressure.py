"""Pressure of the singular value potential and the dimension it defines.

For a Markov base with transition matrix ``Q`` the pressure of the potential

    phi^s(i) = -min(s, k) log lambda_i - max(s - k, 0) log gamma_i

is ``P(s) = log rho(A(s))`` with ``A(s)_ij = Q_ij exp(phi^s(i))``.  Its root
``s0`` in ``[0, d + k]`` is the dimension candidate returned by
:func:`dimension_root`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from . import errors
from .core import (
    SkewSystem,
    _transition_matrix,
    as_matrix,
    compose_inverse,
    count_words,
    cylinder_words,
    word_budget,
)

PERRON_RTOL = 1e-12
PERRON_MAXITER = 100_000
ROOT_TOL = 1e-9
ROOT_MAXITER = 200


# --------------------------------------------------------------------------- singular values


def singular_value_phi(A, s: float) -> float:
    """Singular value function of a matrix.

    Parameters
    ----------
    A : array_like
        Real matrix, not necessarily square.
    s : float
        Exponent, ``s >= 0``.

    Returns
    -------
    float
        ``a_1 ... a_m a_{m+1}^(s-m)`` with ``m = floor(s)`` when ``s`` does not
        exceed the rank, ``|det A|^(s/n)`` beyond it for invertible square
        ``A`` and 0 otherwise.
    """
    if s < 0:
        raise errors.ValidationError("s must be nonnegative")
    if s == 0:
        return 1.0
    A = np.atleast_2d(np.asarray(A, dtype=float))
    sv = np.linalg.svd(A, compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return 0.0
    tol = max(A.shape) * np.finfo(float).eps * sv[0]
    rank = int(np.sum(sv > tol))
    if s <= rank:
        m = int(math.floor(s))
        out = float(np.prod(sv[:m]))
        if s > m:
            out *= float(sv[m]) ** (s - m)
        return out
    if A.shape[0] == A.shape[1] == rank:
        return float(np.prod(sv)) ** (s / rank)
    return 0.0


def phi_batch(mats: np.ndarray, s: float) -> np.ndarray:
    """:func:`singular_value_phi` over a stack of invertible square matrices."""
    mats = np.asarray(mats, dtype=float)
    n = mats.shape[-1]
    if s == 0:
        return np.ones(mats.shape[0])
    sv = np.linalg.svd(mats, compute_uv=False)
    if s >= n:
        return np.prod(sv, axis=-1) ** (s / n)
    m = int(math.floor(s))
    out = np.prod(sv[:, :m], axis=-1)
    if s > m:
        out = out * sv[:, m] ** (s - m)
    return out


# --------------------------------------------------------------------------- pressure matrix


def potential_weights(system, s: float) -> np.ndarray:
    """``exp(phi^s)`` per branch: ``lambda^-min(s,k) * gamma^-max(s-k,0)``."""
    k = system.k
    return system.lambdas ** (-min(s, k)) * system.gammas ** (-max(s - k, 0.0))


@dataclass(frozen=True, eq=False)
class PressureMatrix:
    entries: Any  # ndarray or scipy sparse matrix
    s: float

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        out = self.entries.toarray() if sp.issparse(self.entries) else np.asarray(self.entries)
        return out if dtype is None else out.astype(dtype)


def _resolve_Q(system, Q):
    if Q is not None:
        return Q
    if isinstance(system, SkewSystem):
        if not system.markov:
            raise errors.NotMarkov("the base map is not Markov with respect to its partition")
        return _transition_matrix(system)
    raise errors.ValidationError("a transition matrix is required")


def _q_array(Q):
    if sp.issparse(Q):
        return Q
    if hasattr(Q, "entries") and sp.issparse(getattr(Q, "entries")):
        return Q.entries
    return as_matrix(Q)


def pressure_matrix(system, Q=None, s: float = 0.0) -> PressureMatrix:
    """Weighted transition matrix ``A(s)_ij = Q_ij exp(phi^s(i))``."""
    if isinstance(system, SkewSystem) and Q is None and not system.markov:
        raise errors.NotMarkov("the base map is not Markov with respect to its partition")
    Qa = _q_array(_resolve_Q(system, Q))
    w = potential_weights(system, s)
    if sp.issparse(Qa):
        return PressureMatrix(sp.diags(w) @ Qa.astype(float), s)
    return PressureMatrix(w[:, None] * Qa.astype(float), s)


# --------------------------------------------------------------------------- Perron data


def _components(A):
    graph = sp.csr_matrix(A) if not sp.issparse(A) else A.tocsr()
    graph = graph.copy()
    graph.data = (graph.data != 0).astype(float)
    graph.eliminate_zeros()
    n, labels = connected_components(graph, directed=True, connection="strong")
    return n, labels


def _power(B, tau, x0=None):
    """Power iteration on ``B + tau I`` (irreducible block); returns (rho, right vector)."""
    n = B.shape[0]
    x = np.ones(n) if x0 is None else np.asarray(x0, dtype=float)
    lo, hi = 0.0, np.inf
    for _ in range(PERRON_MAXITER):
        y = B @ x + tau * x
        r = y / x
        lo, hi = float(r.min()), float(r.max())
        x = y / np.linalg.norm(y, ord=np.inf)
        if hi - lo <= PERRON_RTOL * hi:
            return 0.5 * (lo + hi) - tau, x
        if np.any(x <= 0):
            # underflow on a nearly decoupled block; reseed with a positive floor
            x = np.maximum(x, np.finfo(float).tiny)
    raise errors.NonConvergence(f"power iteration did not converge in {PERRON_MAXITER} steps (bracket [{lo}, {hi}])")


def _block(A, idx):
    if sp.issparse(A):
        return A.tocsr()[idx][:, idx]
    return A[np.ix_(idx, idx)]


def _block_radius(A, idx):
    if idx.size == 1:
        i = idx[0]
        return float(A[i, i]), np.ones(1)
    B = _block(A, idx)
    rows = np.asarray(B.sum(axis=1)).ravel()
    tau = max(float(rows.mean()), np.finfo(float).tiny)
    return _power(B, tau)


def spectral_radius(A) -> float:
    """Perron root of a nonnegative matrix.

    The matrix is split into strongly connected components and the largest
    block root is returned.  Each irreducible block is handled by power
    iteration on a diagonally shifted copy, stopped by the Collatz-Wielandt
    bracket at relative width ``1e-12``.
    """
    return perron(A)[0]


def perron(A):
    """Return ``(rho, labels, dominant_component)``."""
    if isinstance(A, PressureMatrix):
        A = A.entries
    if not sp.issparse(A):
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise errors.ValidationError("expected a square matrix")
        if np.any(A < 0):
            raise errors.ValidationError("matrix entries must be nonnegative")
    n, labels = _components(A)
    best, best_c = 0.0, None
    for c in range(n):
        idx = np.flatnonzero(labels == c)
        rho, _ = _block_radius(A, idx)
        if best_c is None or rho > best:
            best, best_c = rho, c
    return max(best, 0.0), labels, best_c


def perron_vectors(A):
    """Perron data on the dominant strongly connected class.

    Returns
    -------
    rho : float
    idx : ndarray
        Indices of the dominant class.
    u, v : ndarray
        Right and left Perron vectors of the block, normalized so ``v @ u = 1``
        and ``sum(u) = 1``.
    """
    if isinstance(A, PressureMatrix):
        A = A.entries
    dense = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
    rho, labels, c = perron(dense)
    idx = np.flatnonzero(labels == c)
    B = dense[np.ix_(idx, idx)]
    if idx.size == 1:
        return rho, idx, np.ones(1), np.ones(1)
    tau = max(float(B.sum(axis=1).mean()), np.finfo(float).tiny)
    _, u = _power(B, tau)
    _, v = _power(B.T, tau)
    u = u / u.sum()
    v = v / (v @ u)
    return rho, idx, u, v


# --------------------------------------------------------------------------- pressure


_RHO_Q_CACHE: dict = {}


def _rho_of_Q(Qa):
    key = id(Qa)
    hit = _RHO_Q_CACHE.get(key)
    if hit is not None and hit[0] is Qa:
        return hit[1]
    rho = spectral_radius(Qa)
    if len(_RHO_Q_CACHE) > 64:
        _RHO_Q_CACHE.clear()
    _RHO_Q_CACHE[key] = (Qa, rho)
    return rho


def pressure_at(system, Q=None, s: float = 0.0) -> float:
    """``P(s) = log rho(A(s))``; ``-inf`` when the subshift has no cycle."""
    Qa = _q_array(_resolve_Q(system, Q))
    w = potential_weights(system, s)
    if np.all(w == w[0]):
        # constant potential: A(s) = w Q
        rho = _rho_of_Q(Qa)
        return math.log(rho) + math.log(w[0]) if rho > 0 else -math.inf
    rho = spectral_radius(pressure_matrix(system, Qa, s))
    return math.log(rho) if rho > 0 else -math.inf


def _stream_linear_parts(system, Q, n, chunk=1 << 15):
    """Yield stacks of composed inverse linear parts over all admissible n-words.

    Also yields the log of the rectangle weights (products of contraction
    ratios) so both brute-force modes share one traversal.
    """
    inv = system.inverses
    L = np.stack([f.linear for f in inv])
    lg = -np.log(system.gammas)
    ll = -np.log(system.lambdas)
    Qb = np.asarray(Q).astype(bool)
    M = system.size

    def expand(mats, last, sg, sl, depth):
        if depth == n:
            yield mats, sg, sl
            return
        parts = []
        for j in range(M):
            mask = Qb[last, j]
            if not mask.any():
                continue
            parts.append((mats[mask] @ L[j], np.full(int(mask.sum()), j), sg[mask] + lg[j], sl[mask] + ll[j]))
        if not parts:
            return
        mats = np.concatenate([p[0] for p in parts])
        last = np.concatenate([p[1] for p in parts])
        sg = np.concatenate([p[2] for p in parts])
        sl = np.concatenate([p[3] for p in parts])
        for a in range(0, mats.shape[0], chunk):
            b = a + chunk
            yield from expand(mats[a:b], last[a:b], sg[a:b], sl[a:b], depth + 1)

    syms = np.array([i for i in range(M) if Qb[i].any() or Qb[:, i].any()]) if n == 1 else np.arange(M)
    yield from expand(L[syms], syms, lg[syms], ll[syms], 1)


def _stream_cylinder_parts(system, n, chunk=1 << 15):
    buf, bg, bl = [], [], []
    lg = -np.log(system.gammas)
    ll = -np.log(system.lambdas)
    for w in cylinder_words(system, n):
        buf.append(compose_inverse(system, w, check=False).linear)
        bg.append(lg[list(w)].sum())
        bl.append(ll[list(w)].sum())
        if len(buf) >= chunk:
            yield np.stack(buf), np.array(bg), np.array(bl)
            buf, bg, bl = [], [], []
    if buf:
        yield np.stack(buf), np.array(bg), np.array(bl)


def pressure_bruteforce(system: SkewSystem, Q=None, s: float = 0.0, n: int = 10, mode: str = "singular") -> float:
    """Finite-n pressure ``(1/n) log sum_w phi^s(F~_w)`` over admissible n-words.

    ``mode="singular"`` uses singular values of the composed inverse linear
    parts, ``mode="rectangle"`` the products ``prod(1/lambda)^min(s,k) *
    prod(1/gamma)^max(s-k,0)`` of contraction ratios along the word.  Without
    a transition matrix the words are the nonempty cylinders of the base.
    """
    if mode not in ("singular", "rectangle"):
        raise errors.ValidationError(f"unknown mode {mode!r}")
    if n < 1:
        raise errors.ValidationError("n must be at least 1")
    k = system.k
    if Q is None and not system.markov:
        stream = _stream_cylinder_parts(system, n)
    else:
        Qa = as_matrix(_resolve_Q(system, Q))
        total = count_words(Qa, n)
        if total > word_budget():
            raise errors.BudgetExceeded(f"{total} words of length {n} exceed the budget {word_budget()}")
        stream = _stream_linear_parts(system, Qa, n)
    logs = []
    for mats, sg, sl in stream:
        if mode == "singular":
            vals = phi_batch(mats, s)
            with np.errstate(divide="ignore"):
                logs.append(np.log(vals))
        else:
            logs.append(min(s, k) * sl + max(s - k, 0.0) * sg)
    if not logs:
        return -math.inf
    allv = np.concatenate(logs)
    top = allv.max()
    return float((top + math.log(np.exp(allv - top).sum())) / n)


# --------------------------------------------------------------------------- comparability


def coupling_norms(system) -> np.ndarray:
    return np.array([np.linalg.norm(c, 2) for c in system.couplings])


def comparability_constant_literal(system) -> float:
    """Comparability constant as printed in the upper-bound argument.

    ``max(|A_i| / lambda_i) / (1 - min(lambda_i / gamma_i))`` in expansion
    ratios.  Kept for reference: it vanishes for uncoupled systems and can
    drop below 1, so it is not a valid two-sided bound in general.
    """
    a = coupling_norms(system)
    return float(np.max(a / system.lambdas) / (1.0 - np.min(system.lambdas / system.gammas)))


def comparability_constant(system, s: float) -> float:
    """Two-sided bound ``c(s) >= 1`` with ``c^-1 <= phi^s(F~_w) / exp(S_n phi^s) <= c``.

    The composed inverse factors as ``diag(X, Z) @ [[I, 0], [E, I]]`` with
    ``|E| <= b = max(|A_i|/gamma_i) / (1 - max(lambda_i/gamma_i))``; the
    unipotent factor has norm ``(b + sqrt(b^2 + 4)) / 2``, which enters each
    of the ``s`` singular value factors once.
    """
    a = coupling_norms(system)
    b = float(np.max(a / system.gammas) / (1.0 - np.max(system.lambdas / system.gammas)))
    return ((b + math.sqrt(b * b + 4.0)) / 2.0) ** s


def perron_prefactor(system, Q, s: float) -> float:
    """Constant ``C >= 1`` with ``C^-1 <= sum_w exp(S_n phi^s) / rho^n <= C`` for all n.

    Requires an irreducible transition matrix.
    """
    A = np.asarray(pressure_matrix(system, Q, s))
    rho, idx, u, _ = perron_vectors(A)
    if idx.size != A.shape[0]:
        raise errors.ValidationError("transition matrix is reducible")
    w = potential_weights(system, s)
    r = w / u
    hi = r.max() * u.sum() / rho
    lo = r.min() * u.sum() / rho
    return float(max(hi, 1.0 / lo, 1.0))


# --------------------------------------------------------------------------- root finding


@dataclass
class DimensionReport:
    s0: float
    bracket: tuple
    pressure_at_root: float
    method: str = "spectral_bisection"
    saturated: bool = False
    iterations: int = 0
    justification: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "s0": self.s0,
            "bracket": list(self.bracket),
            "pressure_at_root": self.pressure_at_root,
            "method": self.method,
            "saturated": self.saturated,
            "iterations": self.iterations,
            "justification": self.justification,
            "notes": self.notes,
        }


def bisect_decreasing(func, lo: float, hi: float, tol: float = ROOT_TOL, maxiter: int = ROOT_MAXITER):
    """Root of a decreasing function with ``func(lo) >= 0 >= func(hi)``.

    Stops once ``|func(mid)| <= tol`` and the bracket is below ``tol`` wide,
    or when the bracket stops shrinking in floating point.
    """
    flo, fhi = func(lo), func(hi)
    if flo < 0 or fhi > 0:
        raise errors.ValidationError("root is not bracketed")
    mid, fmid, it = lo, flo, 0
    for it in range(1, maxiter + 1):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fmid = func(mid)
        if fmid > 0:
            lo = mid
        elif fmid < 0:
            hi = mid
        else:
            lo = hi = mid
            break
        if abs(fmid) <= tol and hi - lo <= tol:
            break
    return mid, (lo, hi), fmid, it


def dimension_root(system, Q=None, justify: bool = False) -> DimensionReport:
    """Root ``s0`` of the pressure on ``[0, d + k]``.

    Non-Markov interval bases are handled by the Markov-subsystem
    approximation (largest root over increasing iterates).  With
    ``justify=True`` the theorem-hypothesis report is attached.
    """
    if Q is None and isinstance(system, SkewSystem) and not system.markov:
        from .approx import approx_dimension

        report = approx_dimension(system)
    else:
        Qm = _resolve_Q(system, Q)
        Qa = _q_array(Qm)
        top = system.d + system.k
        h = pressure_at(system, Qa, 0.0)
        if not math.isfinite(h) or h < 0:
            raise errors.NoCycle("the transition matrix has no cycle")
        p_top = pressure_at(system, Qa, float(top))
        if p_top > 0:
            report = DimensionReport(float(top), (float(top), float(top)), p_top, saturated=True)
        else:
            s0, br, p0, it = bisect_decreasing(lambda t: pressure_at(system, Qa, t), 0.0, float(top))
            report = DimensionReport(s0, br, p0, iterations=it)
    if justify:
        from .conditions import justify_dimension

        hyp = justify_dimension(system, Q, report.s0)
        report.justification = hyp.justification
    return report


# --------------------------------------------------------------------------- measures


@dataclass
class MeasureSpec:
    """Shift-invariant measure on the symbolic coding.

    ``marginal`` holds the cell masses ``mu(I_i)`` that define the Lyapunov
    exponents; ``entropy`` is the metric entropy of the shift.
    """

    variant: str  # "bernoulli" | "markov" | "qstep"
    marginal: np.ndarray
    entropy: float
    p: Optional[np.ndarray] = None
    P: Optional[np.ndarray] = None
    stationary: Optional[np.ndarray] = None
    j: Optional[int] = None
    q: Optional[int] = None
    loops: Optional[list] = None
    weights: Optional[np.ndarray] = None
    flags: list = field(default_factory=list)

    def exponents(self, system) -> tuple:
        """``(chi1, chi2)``: base and fiber Lyapunov exponents."""
        m = np.asarray(self.marginal, dtype=float)
        return float(m @ np.log(system.gammas)), float(m @ np.log(system.lambdas))

    def to_dict(self) -> dict:
        out = {"variant": self.variant, "entropy": self.entropy, "marginal": self.marginal}
        for name in ("p", "P", "stationary", "j", "q", "weights"):
            val = getattr(self, name)
            if val is not None:
                out[name] = val
        if self.loops is not None:
            out["loops"] = [list(w) for w in self.loops]
        out["flags"] = self.flags
        return out


def _entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def bernoulli_measure(p) -> MeasureSpec:
    p = np.asarray(p, dtype=float)
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise errors.ValidationError("Bernoulli weights must be a probability vector")
    return MeasureSpec("bernoulli", p.copy(), _entropy(p), p=p.copy())


def markov_measure(P, stationary=None, flags=None) -> MeasureSpec:
    P = np.asarray(P, dtype=float)
    if np.any(P < 0) or np.max(np.abs(P.sum(axis=1) - 1.0)) > 1e-10:
        raise errors.ValidationError("P must be row stochastic")
    if stationary is None:
        _, idx, _, v = perron_vectors(P)
        pi = np.zeros(P.shape[0])
        pi[idx] = v / v.sum()
    else:
        pi = np.asarray(stationary, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(P > 0, np.log(np.where(P > 0, P, 1.0)), 0.0)
    h = float(-(pi[:, None] * P * logs).sum())
    return MeasureSpec("markov", pi, h, P=P, stationary=pi, flags=list(flags or []))


def equilibrium_measure(system, Q=None, s: float = 0.0) -> MeasureSpec:
    """Equilibrium measure of ``phi^s`` on the Markov coding.

    Full shifts give the Bernoulli measure with ``p_i`` proportional to the
    potential weights.  Otherwise the pressure matrix is turned into a
    stochastic matrix with its Perron vectors, ``P_ij = A_ij u_j / (rho u_i)``,
    and the stationary vector is ``v_i u_i``.  A reducible matrix is
    restricted to its dominant class and the result is flagged.
    """
    Qa = as_matrix(_resolve_Q(system, Q))
    top = system.d + system.k
    if not 0 <= s <= top:
        raise errors.ValidationError(f"s must lie in [0, {top}]")
    w = potential_weights(system, s)
    if np.all(Qa == 1):
        return bernoulli_measure(w / w.sum())
    A = w[:, None] * Qa.astype(float)
    rho, idx, u, v = perron_vectors(A)
    if rho <= 0:
        raise errors.NoCycle("the transition matrix has no cycle")
    N = A.shape[0]
    B = A[np.ix_(idx, idx)]
    Pb = B * u[None, :] / (rho * u[:, None])
    Pb = Pb / Pb.sum(axis=1, keepdims=True)
    P = np.zeros((N, N))
    P[np.ix_(idx, idx)] = Pb
    pi = np.zeros(N)
    pi[idx] = v * u / (v * u).sum()
    flags = []
    if idx.size != N:
        # rows outside the class: keep P stochastic with self loops, they carry no mass
        for i in range(N):
            if i not in set(idx.tolist()):
                P[i, i] = 1.0
        flags.append("restricted_to_dominant_class")
    return markov_measure(P, pi, flags)


def lyapunov_dimension(system, mu: MeasureSpec, return_flags: bool = False):
    """``min(h / chi2, k + (h - k chi2) / chi1)``.

    For ``k > 1`` the ``k chi2`` term is the corrected form of the fiber
    contribution; ``return_flags=True`` reports this.
    """
    chi1, chi2 = mu.exponents(system)
    if not chi1 > chi2 or not chi2 > 0:
        raise errors.ExponentOrderViolated(f"exponents must satisfy chi1 > chi2 > 0 (got {chi1}, {chi2})")
    k = system.k
    h = float(mu.entropy)
    flags = ["corrected_fiber_term"] if k > 1 else []
    if h <= 0:
        D = 0.0
    else:
        D = min(h / chi2, k + (h - k * chi2) / chi1)
    return (D, flags) if return_flags else D
