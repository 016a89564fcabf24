"""Static images: binary PPM rasters and SVG polylines.

Output bytes depend only on the input and the image spec.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import errors
from .estimation import Cover

MAX_SIDE = 16384
INK = (0, 0, 0)
PAPER = (255, 255, 255)


@dataclass(frozen=True)
class ImageSpec:
    width: int = 800
    height: int = 600
    fmt: str = "ppm"  # "ppm" | "svg"
    bounds: tuple | None = None  # ((xmin, xmax), (ymin, ymax)); data hull by default

    def check(self):
        for side in (self.width, self.height):
            if not isinstance(side, (int, np.integer)) or isinstance(side, bool) or not 0 < side <= MAX_SIDE:
                raise errors.BadDimensions(f"image sides must be integers in [1, {MAX_SIDE}], got {self.width}x{self.height}")
        if self.fmt not in ("ppm", "svg"):
            raise errors.BadDimensions(f"unknown image format {self.fmt!r}")


def _ppm(rgb: np.ndarray) -> bytes:
    h, w, _ = rgb.shape
    return b"P6\n%d %d\n255\n" % (w, h) + rgb.astype(np.uint8).tobytes()


def _bounds(spec, lo, hi):
    if spec.bounds is not None:
        (x0, x1), (y0, y1) = spec.bounds
        lo, hi = np.array([x0, y0], float), np.array([x1, y1], float)
    ext = hi - lo
    # degenerate extents map to the middle of the image
    ext = np.where(ext > 0, ext, 1.0)
    lo = np.where(hi - lo > 0, lo, lo - 0.5)
    return lo, ext


def _to_pixels(P, spec, lo, ext):
    u = (P[:, 0] - lo[0]) / ext[0]
    v = (P[:, 1] - lo[1]) / ext[1]
    col = np.clip(np.floor(u * spec.width), 0, spec.width - 1).astype(int)
    row = np.clip(np.floor((1 - v) * spec.height), 0, spec.height - 1).astype(int)
    return col, row, u, v


def _render_points(P, spec):
    lo, ext = _bounds(spec, P.min(axis=0), P.max(axis=0))
    col, row, u, v = _to_pixels(P, spec, lo, ext)
    if spec.fmt == "ppm":
        img = np.empty((spec.height, spec.width, 3), np.uint8)
        img[:] = PAPER
        img[row, col] = INK
        return _ppm(img)
    xs = u * spec.width
    ys = (1 - v) * spec.height
    pts = " ".join(f"{a:.3f},{b:.3f}" for a, b in zip(xs, ys))
    return _svg(spec, f'<polyline fill="none" stroke="black" stroke-width="1" points="{pts}"/>')


def _render_cover(cover, spec):
    if cover.lo.shape[1] != 2:
        raise errors.BadDimensions("only planar covers can be drawn")
    lo, ext = _bounds(spec, cover.lo.min(axis=0), cover.hi.max(axis=0))
    _, _, u0, v0 = _to_pixels(cover.lo, spec, lo, ext)
    _, _, u1, v1 = _to_pixels(cover.hi, spec, lo, ext)
    if spec.fmt == "ppm":
        img = np.empty((spec.height, spec.width, 3), np.uint8)
        img[:] = PAPER
        c0 = np.clip(np.floor(u0 * spec.width), 0, spec.width - 1).astype(int)
        c1 = np.clip(np.floor(u1 * spec.width), 0, spec.width - 1).astype(int)
        r0 = np.clip(np.floor((1 - v1) * spec.height), 0, spec.height - 1).astype(int)
        r1 = np.clip(np.floor((1 - v0) * spec.height), 0, spec.height - 1).astype(int)
        for a, b, c, d in zip(r0, r1, c0, c1):
            img[a : b + 1, c : d + 1] = INK
        return _ppm(img)
    body = "\n".join(
        f'<rect x="{a * spec.width:.3f}" y="{(1 - d) * spec.height:.3f}" '
        f'width="{(b - a) * spec.width:.3f}" height="{(d - c) * spec.height:.3f}" '
        'fill="none" stroke="black" stroke-width="0.5"/>'
        for a, b, c, d in zip(u0, u1, v0, v1)
    )
    return _svg(spec, body)


def _render_heightmap(Z, spec):
    if spec.fmt != "ppm":
        raise errors.BadDimensions("heightmaps are raster only")
    Z = np.asarray(Z, dtype=float)
    lo, hi = Z.min(), Z.max()
    g = np.zeros_like(Z) if hi == lo else (Z - lo) / (hi - lo)
    # nearest-neighbour resample onto the image grid; first axis runs along x
    ix = np.minimum((np.arange(spec.width) * Z.shape[0]) // spec.width, Z.shape[0] - 1)
    iy = np.minimum((np.arange(spec.height) * Z.shape[1]) // spec.height, Z.shape[1] - 1)
    grey = np.round(255 * g[np.ix_(ix, iy[::-1])].T).astype(np.uint8)
    return _ppm(np.repeat(grey[:, :, None], 3, axis=2))


def _svg(spec, body):
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{spec.width}" height="{spec.height}" '
        f'viewBox="0 0 {spec.width} {spec.height}">\n'
        f'<rect width="{spec.width}" height="{spec.height}" fill="white"/>\n'
    )
    return (head + body + "\n</svg>\n").encode()


def render(data, spec: ImageSpec | None = None, surface: bool = False) -> bytes:
    """Draw graph samples, a planar cover, or (``surface=True``) a heightmap grid.

    Samples are an ``(n, 2)`` array or an ``(xs, ys)`` pair; a heightmap is
    a 2-D array of values on a product grid.
    """
    spec = spec or ImageSpec()
    spec.check()
    if isinstance(data, Cover):
        if len(data) == 0:
            raise errors.BadDimensions("empty cover")
        return _render_cover(data, spec)
    if surface:
        Z = np.asarray(data, dtype=float)
        if Z.ndim != 2 or Z.size == 0:
            raise errors.BadDimensions("heightmap must be a nonempty 2-D array")
        return _render_heightmap(Z, spec)
    if isinstance(data, tuple) and len(data) == 2:
        data = np.column_stack([np.asarray(data[0], float), np.asarray(data[1], float)])
    P = np.atleast_2d(np.asarray(data, dtype=float))
    if P.ndim != 2 or P.shape[1] != 2 or P.shape[0] == 0:
        raise errors.BadDimensions(f"expected a nonempty (n, 2) sample array, got shape {P.shape}")
    return _render_points(P, spec)


def write_image(path, data, spec: ImageSpec | None = None, surface: bool = False) -> None:
    with open(path, "wb") as fh:
        fh.write(render(data, spec, surface))
