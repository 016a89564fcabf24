"""System model for piecewise affine expanding skew products.

A system is ``F(x, z) = (f_i(x), g_i(x, z))`` for ``x`` in the cell ``I_i`` of a
partition of the unit cube ``[0, 1]^d``, with

    f_i(x)    = gamma_i U_i x + v_i
    g_i(x, z) = A_i x + lambda_i O_i z + t_i

Systems are stored with the *expansion* ratios ``gamma_i > lambda_i > 1``.
Everything that works with cylinder maps goes through the local inverses
(contractions), built here by :func:`inverse_branch` and
:func:`compose_inverse`.

Partition endpoints, ratios and shifts are kept as :class:`fractions.Fraction`
whenever the input is rational, so that Markov detection is exact.
"""
from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterator, Mapping, Sequence, Union

import numpy as np

from . import errors

Number = Union[Fraction, float]

SNAP_TOL = 1e-9
ORTH_TOL = 1e-12
DEFAULT_WORD_BUDGET = 10**7


def word_budget() -> int:
    """Cap on the number of words any enumeration may produce.

    Overridden by the ``REPDIM_WORD_BUDGET`` environment variable.
    """
    raw = os.environ.get("REPDIM_WORD_BUDGET")
    if raw:
        try:
            return int(raw)
        except ValueError:
            raise errors.ValidationError(f"REPDIM_WORD_BUDGET is not an integer: {raw!r}")
    return DEFAULT_WORD_BUDGET


def parse_number(value) -> Number:
    """Parse ``"3/2"``, ``"0.75"``, ints and Fractions exactly; floats stay floats."""
    if isinstance(value, bool):
        raise errors.MalformedSystem(f"not a number: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return value
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            try:
                return float(value)
            except ValueError:
                raise errors.MalformedSystem(f"not a number: {value!r}") from None
    if isinstance(value, (np.floating, np.integer)):
        return parse_number(value.item())
    raise errors.MalformedSystem(f"not a number: {value!r}")


def is_exact(*values) -> bool:
    return all(isinstance(v, Fraction) for v in values)


def _close(a: Number, b: Number) -> bool:
    if is_exact(a, b):
        return a == b
    return abs(float(a) - float(b)) <= SNAP_TOL


def _le(a: Number, b: Number) -> bool:
    """``a <= b``, with snapping for float endpoints."""
    if is_exact(a, b):
        return a <= b
    return float(a) <= float(b) + SNAP_TOL


def _matrix(rows, shape, what) -> tuple:
    try:
        out = tuple(tuple(parse_number(v) for v in row) for row in rows)
    except TypeError:
        raise errors.MalformedSystem(f"{what} must be a nested list") from None
    if len(out) != shape[0] or any(len(r) != shape[1] for r in out):
        raise errors.MalformedSystem(f"{what} must have shape {shape}")
    return out


def _vector(vals, n, what) -> tuple:
    try:
        out = tuple(parse_number(v) for v in vals)
    except TypeError:
        raise errors.MalformedSystem(f"{what} must be a list") from None
    if len(out) != n:
        raise errors.MalformedSystem(f"{what} must have length {n}")
    return out


def _to_float(m) -> np.ndarray:
    return np.array([[float(v) for v in row] for row in m], dtype=float) if m and isinstance(m[0], tuple) \
        else np.array([float(v) for v in m], dtype=float)


# --------------------------------------------------------------------------- types


@dataclass(frozen=True)
class PartitionCell:
    index: int
    bounds: tuple  # ((lo, hi), ...) one pair per coordinate

    @property
    def lower(self) -> np.ndarray:
        return np.array([float(lo) for lo, _ in self.bounds])

    @property
    def upper(self) -> np.ndarray:
        return np.array([float(hi) for _, hi in self.bounds])

    @property
    def volume(self) -> Number:
        out = Fraction(1)
        for lo, hi in self.bounds:
            out = out * (hi - lo)
        return out


@dataclass(frozen=True)
class BaseBranch:
    cell: int
    ratio: Number
    orth: tuple
    shift: tuple

    @cached_property
    def linear(self) -> np.ndarray:
        return float(self.ratio) * _to_float(self.orth)


@dataclass(frozen=True)
class FiberBranch:
    ratio: Number
    orth: tuple
    coupling: tuple
    shift: tuple


@dataclass(frozen=True)
class SkewSystem:
    d: int
    k: int
    cells: tuple
    branches: tuple  # ((BaseBranch, FiberBranch), ...)
    markov: bool = False
    meta: Mapping = field(default_factory=dict, compare=False, hash=False)

    @property
    def size(self) -> int:
        return len(self.branches)

    @property
    def dim(self) -> int:
        return self.d + self.k

    @cached_property
    def gammas(self) -> np.ndarray:
        return np.array([float(b.ratio) for b, _ in self.branches])

    @cached_property
    def lambdas(self) -> np.ndarray:
        return np.array([float(g.ratio) for _, g in self.branches])

    @cached_property
    def couplings(self) -> np.ndarray:
        return np.array([_to_float(g.coupling) for _, g in self.branches]).reshape(self.size, self.k, self.d)

    @cached_property
    def inverses(self) -> tuple:
        return tuple(inverse_branch(self, i) for i in range(self.size))

    @cached_property
    def diagonal(self) -> bool:
        """True when no fiber map depends on the base coordinate."""
        return all(all(v == 0 for row in g.coupling for v in row) for _, g in self.branches)

    @cached_property
    def axis_preserving(self) -> bool:
        return all(_signed_permutation(b.orth) is not None for b, _ in self.branches)


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """0/1 cell-to-cell covering relation of a Markov base."""

    entries: np.ndarray

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __eq__(self, other):
        return np.array_equal(np.asarray(self), np.asarray(other))

    def __hash__(self):
        return hash(self.entries.tobytes())


@dataclass(frozen=True, eq=False)
class AffineContraction:
    """``x -> linear @ x + shift`` on R^(d+k), block lower triangular."""

    linear: np.ndarray
    shift: np.ndarray
    d: int
    k: int

    @classmethod
    def identity(cls, d: int, k: int) -> "AffineContraction":
        return cls(np.eye(d + k), np.zeros(d + k), d, k)

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        return pts @ self.linear.T + self.shift

    def compose(self, other: "AffineContraction") -> "AffineContraction":
        """``self o other``."""
        return AffineContraction(self.linear @ other.linear, self.linear @ other.shift + self.shift, self.d, self.k)

    __matmul__ = compose

    @property
    def base_block(self) -> np.ndarray:
        return self.linear[: self.d, : self.d]

    @property
    def fiber_block(self) -> np.ndarray:
        return self.linear[self.d :, self.d :]

    @property
    def coupling_block(self) -> np.ndarray:
        return self.linear[self.d :, : self.d]

    def allclose(self, other: "AffineContraction", atol=1e-10) -> bool:
        return np.allclose(self.linear, other.linear, rtol=0, atol=atol) and np.allclose(
            self.shift, other.shift, rtol=0, atol=atol
        )


# --------------------------------------------------------------------------- geometry helpers


def _signed_permutation(orth):
    """Return [(source_col, sign), ...] per row if ``orth`` is a signed permutation."""
    out = []
    for row in orth:
        hits = [(c, v) for c, v in enumerate(row) if not _close(v, 0)]
        if len(hits) != 1 or not _close(abs(hits[0][1]), 1):
            return None
        c, v = hits[0]
        out.append((c, 1 if float(v) > 0 else -1))
    if sorted(c for c, _ in out) != list(range(len(orth))):
        return None
    return out


def _affine_box(scale: Number, perm, shift, box):
    """Image of an axis-parallel box under ``x -> scale * P x + shift``, P signed permutation."""
    out = []
    for r, (c, sign) in enumerate(perm):
        lo, hi = box[c]
        a, b = scale * lo, scale * hi
        if sign < 0:
            a, b = -b, -a
        out.append((a + shift[r], b + shift[r]))
    return tuple(out)


def _inverse_box(scale: Number, perm, shift, box):
    """Preimage of a box under ``x -> scale * P x + shift``."""
    out = [None] * len(perm)
    for r, (c, sign) in enumerate(perm):
        lo, hi = box[r]
        a, b = (lo - shift[r]) / scale, (hi - shift[r]) / scale
        if sign < 0:
            a, b = -b, -a
        out[c] = (a, b)
    return tuple(out)


def _box_inside(inner, outer) -> bool:
    return all(_le(o_lo, i_lo) and _le(i_hi, o_hi) for (i_lo, i_hi), (o_lo, o_hi) in zip(inner, outer))


def _box_intersection(a, b):
    out = []
    for (a_lo, a_hi), (b_lo, b_hi) in zip(a, b):
        lo = max(a_lo, b_lo, key=float)
        hi = min(a_hi, b_hi, key=float)
        out.append((lo, hi))
    return tuple(out)


def _box_has_interior(box) -> bool:
    for lo, hi in box:
        if is_exact(lo, hi):
            if not lo < hi:
                return False
        elif not float(hi) - float(lo) > SNAP_TOL:
            return False
    return True


def _box_volume(box) -> Number:
    out = Fraction(1)
    for lo, hi in box:
        out = out * (hi - lo)
    return out


# --------------------------------------------------------------------------- validation


def build_system(d: int, k: int, cells, bases, fibers, meta=None) -> SkewSystem:
    """Validate typed components and return a :class:`SkewSystem`.

    ``cells`` is a sequence of boxes ``((lo, hi), ...)``; ``bases`` and
    ``fibers`` are :class:`BaseBranch` / :class:`FiberBranch` sequences aligned
    with the cells.
    """
    if d < 1 or k < 1:
        raise errors.MalformedSystem("d and k must be positive")
    M = len(cells)
    if M < 2:
        raise errors.AlphabetTooSmall(f"alphabet has {M} symbol(s); at least 2 are required")
    if len(bases) != M or len(fibers) != M:
        raise errors.MalformedSystem("cells, base and fiber branches must have equal length")
    cell_objs = []
    for i, box in enumerate(cells):
        box = tuple((parse_number(lo), parse_number(hi)) for lo, hi in box)
        if len(box) != d:
            raise errors.MalformedSystem(f"cell {i} must have {d} coordinate intervals")
        for lo, hi in box:
            if not (float(lo) < float(hi)) or (is_exact(lo, hi) and not lo < hi):
                raise errors.PartitionError(f"cell {i} has an empty coordinate interval [{lo}, {hi}]")
        cell_objs.append(PartitionCell(i, box))
    _check_partition(cell_objs, d)

    for i, (b, g) in enumerate(zip(bases, fibers)):
        if len(b.orth) != d or len(b.shift) != d:
            raise errors.MalformedSystem(f"branch {i}: base orth/shift shape mismatch")
        if len(g.orth) != k or len(g.shift) != k or len(g.coupling) != k or any(len(r) != d for r in g.coupling):
            raise errors.MalformedSystem(f"branch {i}: fiber orth/coupling/shift shape mismatch")
        if not float(b.ratio) > 1 or not float(g.ratio) > 1:
            raise errors.NotExpanding(f"branch {i}: ratios must exceed 1 (gamma={b.ratio}, lambda={g.ratio})")
        if not float(b.ratio) > float(g.ratio) or (is_exact(b.ratio, g.ratio) and not b.ratio > g.ratio):
            raise errors.DominationViolated(
                f"branch {i}: base ratio {b.ratio} must exceed fiber ratio {g.ratio}"
            )
        for name, m, n in (("base", b.orth, d), ("fiber", g.orth, k)):
            arr = _to_float(m)
            if np.max(np.abs(arr.T @ arr - np.eye(n))) > ORTH_TOL:
                raise errors.MalformedSystem(f"branch {i}: {name} orth part is not orthogonal")
        _check_image(i, cell_objs[i], b, d)

    bases = tuple(BaseBranch(i, b.ratio, b.orth, b.shift) for i, b in enumerate(bases))
    markov = _detect_markov(cell_objs, bases)
    return SkewSystem(d, k, tuple(cell_objs), tuple(zip(bases, fibers)), markov, dict(meta or {}))


def _check_partition(cells, d):
    unit = tuple((Fraction(0), Fraction(1)) for _ in range(d))
    for c in cells:
        if not _box_inside(c.bounds, unit):
            raise errors.PartitionError(f"cell {c.index} leaves the unit cube")
    for a, b in itertools.combinations(cells, 2):
        if _box_has_interior(_box_intersection(a.bounds, b.bounds)):
            raise errors.PartitionOverlap(f"cells {a.index} and {b.index} overlap")
    total = sum((c.volume for c in cells), Fraction(0))
    if isinstance(total, Fraction):
        if total != 1:
            raise errors.PartitionGap(f"cells cover volume {total} of the unit cube")
    elif abs(float(total) - 1.0) > SNAP_TOL:
        raise errors.PartitionGap(f"cells cover volume {float(total):.12g} of the unit cube")


def _check_image(i, cell, base, d):
    perm = _signed_permutation(base.orth)
    unit = tuple((Fraction(0), Fraction(1)) for _ in range(d))
    if perm is not None:
        ok = _box_inside(_affine_box(base.ratio, perm, base.shift, cell.bounds), unit)
    else:
        corners = np.array(list(itertools.product(*[(float(lo), float(hi)) for lo, hi in cell.bounds])))
        img = corners @ base.linear.T + _to_float(base.shift)
        ok = bool(np.all(img >= -SNAP_TOL) and np.all(img <= 1 + SNAP_TOL))
    if not ok:
        raise errors.ImageEscapes(f"branch {i} maps its cell outside the unit cube")


def _branch_image(base: BaseBranch, cell: PartitionCell):
    perm = _signed_permutation(base.orth)
    if perm is None:
        return None
    return _affine_box(base.ratio, perm, base.shift, cell.bounds)


def _detect_markov(cells, bases) -> bool:
    for b in bases:
        img = _branch_image(b, cells[b.cell])
        if img is None:
            return False
        covered = sum((c.volume for c in cells if _box_inside(c.bounds, img)), Fraction(0))
        if not _close(covered, _box_volume(img)):
            return False
    return True


def validate_system(spec: Mapping) -> SkewSystem:
    """Parse and validate a raw system description (the JSON system format)."""
    if not isinstance(spec, Mapping):
        raise errors.MalformedSystem("system description must be an object")
    try:
        d, k, raw = int(spec["d"]), int(spec["k"]), spec["branches"]
    except (KeyError, TypeError, ValueError) as exc:
        raise errors.MalformedSystem(f"missing or invalid top-level field: {exc}") from None
    if not isinstance(raw, Sequence) or isinstance(raw, (str, bytes)):
        raise errors.MalformedSystem("'branches' must be an array")
    cells, bases, fibers = [], [], []
    for i, br in enumerate(raw):
        try:
            cell = tuple((parse_number(lo), parse_number(hi)) for lo, hi in br["cell"])
            bb, fb = br["base"], br["fiber"]
            bases.append(
                BaseBranch(
                    i,
                    parse_number(bb["ratio"]),
                    _matrix(bb["orth"], (d, d), f"branch {i} base orth"),
                    _vector(bb["shift"], d, f"branch {i} base shift"),
                )
            )
            fibers.append(
                FiberBranch(
                    parse_number(fb["ratio"]),
                    _matrix(fb["orth"], (k, k), f"branch {i} fiber orth"),
                    _matrix(fb["coupling"], (k, d), f"branch {i} fiber coupling"),
                    _vector(fb["shift"], k, f"branch {i} fiber shift"),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, errors.RepdimError):
                raise
            raise errors.MalformedSystem(f"branch {i} is malformed: {exc!r}") from None
        cells.append(cell)
    return build_system(d, k, cells, bases, fibers, spec.get("meta"))


# --------------------------------------------------------------------------- symbolic dynamics


def build_transition_matrix(system: SkewSystem) -> TransitionMatrix:
    """``Q[i, j] = 1`` iff cell j lies inside ``f_i(cell_i)``."""
    if not system.markov:
        raise errors.NotMarkov("the base map is not Markov with respect to its partition")
    return _transition_matrix(system)


_TM_CACHE: dict = {}


def _transition_matrix(system):
    key = (system.d, system.cells, system.branches)
    hit = _TM_CACHE.get(key)
    if hit is not None:
        return hit
    M = system.size
    Q = np.zeros((M, M), dtype=np.int64)
    for i, (b, _) in enumerate(system.branches):
        img = _branch_image(b, system.cells[i])
        for j, c in enumerate(system.cells):
            if _box_inside(c.bounds, img):
                Q[i, j] = 1
    out = TransitionMatrix(Q)
    if len(_TM_CACHE) > 256:
        _TM_CACHE.clear()
    _TM_CACHE[key] = out
    return out


def as_matrix(Q) -> np.ndarray:
    return np.asarray(Q)


def count_words(Q, n: int) -> int:
    """Number of admissible words of length ``n`` (exact integer arithmetic)."""
    A = as_matrix(Q).astype(object)
    M = A.shape[0]
    if n < 1:
        raise errors.ValidationError("word length must be at least 1")
    if n == 1:
        return len(_unit_symbols(as_matrix(Q)))
    v = np.ones(M, dtype=object)
    for _ in range(n - 1):
        v = A.dot(v)
    return int(sum(v))


def _unit_symbols(A):
    return [i for i in range(A.shape[0]) if A[i].any() or A[:, i].any()]


def iter_words(Q, n: int) -> Iterator[tuple]:
    """Admissible words of length ``n`` in lexicographic order (depth first)."""
    A = as_matrix(Q)
    if n < 1:
        raise errors.ValidationError("word length must be at least 1")
    if n == 1:
        for i in _unit_symbols(A):
            yield (i,)
        return
    succ = [np.flatnonzero(A[i]).tolist() for i in range(A.shape[0])]
    stack = [(i,) for i in reversed(range(A.shape[0]))]
    while stack:
        w = stack.pop()
        if len(w) == n:
            yield w
            continue
        for j in reversed(succ[w[-1]]):
            stack.append(w + (j,))


def enumerate_words(Q, n: int, budget: int | None = None) -> list:
    budget = word_budget() if budget is None else budget
    total = count_words(Q, n)
    if total > budget:
        raise errors.BudgetExceeded(f"{total} words of length {n} exceed the budget {budget}")
    return list(iter_words(Q, n))


def is_admissible(Q, word) -> bool:
    A = as_matrix(Q)
    return all(A[a, b] for a, b in zip(word, word[1:]))


def cylinder(system: SkewSystem, word) -> tuple | None:
    """Closed box of base points whose orbit follows ``word``; None if it has no interior.

    Works for any system whose base orthogonal parts are signed permutations.
    """
    if not system.axis_preserving:
        raise errors.ValidationError("cylinder sets are only computed for axis-preserving base maps")
    unit = tuple((Fraction(0), Fraction(1)) for _ in range(system.d))
    box = unit
    for sym in reversed(word):
        b, _ = system.branches[sym]
        cell = system.cells[sym].bounds
        pre = _inverse_box(b.ratio, _signed_permutation(b.orth), b.shift, box)
        box = _box_intersection(cell, pre)
        if not _box_has_interior(box):
            return None
    return box


def cylinder_words(system: SkewSystem, n: int, budget: int | None = None) -> Iterator[tuple]:
    """Words of length ``n`` with nonempty cylinders, lexicographic, for any base."""
    if system.markov:
        yield from iter_words(_transition_matrix(system), n)
        return
    budget = word_budget() if budget is None else budget
    produced = 0
    M = system.size
    stack = [((i,), system.cells[i].bounds) for i in reversed(range(M))]
    # forward refinement: cylinder of w+(j) = cyl(w) cap f_w^{-1}(cell_j)
    while stack:
        w, box = stack.pop()
        if len(w) == n:
            produced += 1
            if produced > budget:
                raise errors.BudgetExceeded(f"more than {budget} cylinder words of length {n}")
            yield w
            continue
        img = _image_of_cylinder(system, w, box)
        for j in reversed(range(M)):
            inter = _box_intersection(img, system.cells[j].bounds)
            if _box_has_interior(inter):
                stack.append((w + (j,), _pull_back(system, w, inter)))


def _image_of_cylinder(system, word, box):
    for sym in word:
        b, _ = system.branches[sym]
        box = _affine_box(b.ratio, _signed_permutation(b.orth), b.shift, box)
    return box


def _pull_back(system, word, box):
    for sym in reversed(word):
        b, _ = system.branches[sym]
        box = _inverse_box(b.ratio, _signed_permutation(b.orth), b.shift, box)
    return box


def admissible(system: SkewSystem, word) -> bool:
    if not word:
        return True
    if system.markov:
        return is_admissible(_transition_matrix(system), word)
    return cylinder(system, word) is not None


# --------------------------------------------------------------------------- inverse branches


def inverse_branch(system: SkewSystem, i: int) -> AffineContraction:
    """Local inverse of ``F_i`` extended to all of R^(d+k)."""
    b, g = system.branches[i]
    d, k = system.d, system.k
    U = _to_float(b.orth)
    O = _to_float(g.orth)
    A = _to_float(g.coupling).reshape(k, d)
    gam, lam = float(b.ratio), float(g.ratio)
    v, t = _to_float(b.shift), _to_float(g.shift)
    L = np.zeros((d + k, d + k))
    L[:d, :d] = U.T / gam
    L[d:, d:] = O.T / lam
    L[d:, :d] = -O.T @ A @ U.T / (gam * lam)
    x0 = -U.T @ v / gam
    z0 = O.T @ (-A @ x0 - t) / lam
    return AffineContraction(L, np.concatenate([x0, z0]), d, k)


def compose_inverse(system: SkewSystem, word, check: bool = True) -> AffineContraction:
    """``F~_{i0} o ... o F~_{i(n-1)}``; the empty word gives the identity."""
    if check and not admissible(system, tuple(word)):
        raise errors.EmptyCylinder(f"word {tuple(word)} has an empty cylinder")
    out = AffineContraction.identity(system.d, system.k)
    for sym in word:
        out = out.compose(system.inverses[sym])
    return out
