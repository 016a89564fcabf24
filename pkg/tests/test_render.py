import numpy as np
import pytest

from repdim import errors
from repdim.estimation import attractor_cover, takagi_partial_sum, takagi_surface
from repdim.render import ImageSpec, render, write_image


def _decode_ppm(data):
    head, rest = data.split(b"\n", 1)
    assert head == b"P6"
    dims, rest = rest.split(b"\n", 1)
    w, h = (int(v) for v in dims.split())
    maxval, pixels = rest.split(b"\n", 1)
    assert maxval == b"255"
    return np.frombuffer(pixels, np.uint8).reshape(h, w, 3)


def test_single_point_sets_one_pixel():
    img = _decode_ppm(render(np.array([[0.3, 0.7]]), ImageSpec(10, 8)))
    dark = np.argwhere(img.sum(axis=2) == 0)
    assert dark.shape == (1, 2)
    # a degenerate extent lands in the middle
    assert tuple(dark[0]) == (4, 5)


def test_header_and_size():
    data = render(np.array([[0, 0], [1, 1]]), ImageSpec(7, 5))
    assert data.startswith(b"P6\n7 5\n255\n")
    assert len(data) == len(b"P6\n7 5\n255\n") + 7 * 5 * 3


def test_deterministic_bytes():
    xs = np.linspace(0, 1, 2049)
    ys = takagi_partial_sum(2, 0.75, xs)[0]
    for fmt in ("ppm", "svg"):
        spec = ImageSpec(200, 150, fmt)
        assert render((xs, ys), spec) == render((xs, ys), spec)


def test_corners_map_to_corners():
    img = _decode_ppm(render(np.array([[0, 0], [1, 1]]), ImageSpec(20, 10)))
    assert img[9, 0].sum() == 0 and img[0, 19].sum() == 0


@pytest.mark.parametrize("spec", [ImageSpec(0, 10), ImageSpec(10, -1), ImageSpec(20000, 10), ImageSpec(10.5, 10), ImageSpec(10, 10, "png")])
def test_bad_dimensions(spec):
    with pytest.raises(errors.BadDimensions):
        render(np.zeros((3, 2)), spec)


def test_bad_input():
    with pytest.raises(errors.BadDimensions):
        render(np.zeros((0, 2)))
    with pytest.raises(errors.BadDimensions):
        render(np.zeros((4, 3)))


def test_svg_polyline():
    text = render(np.array([[0, 0], [0.5, 1], [1, 0]]), ImageSpec(100, 50, "svg")).decode()
    assert 'version="1.1"' in text and "<polyline" in text
    assert 'points="0.000,50.000 50.000,0.000 100.000,50.000"' in text


def test_heightmap_is_grey():
    g = np.linspace(0, 1, 65)
    Z, _ = takagi_surface((2, 2), 0.75, (g, g), 30)
    img = _decode_ppm(render(Z, ImageSpec(64, 48), surface=True))
    assert np.all(img[..., 0] == img[..., 1]) and np.all(img[..., 1] == img[..., 2])
    assert img.min() == 0 and img.max() == 255
    with pytest.raises(errors.BadDimensions):
        render(Z, ImageSpec(64, 48, "svg"), surface=True)


def test_cover_rendering(takagi, tmp_path):
    cover = attractor_cover(takagi, 4)
    img = _decode_ppm(render(cover, ImageSpec(64, 64)))
    ink = (img.sum(axis=2) == 0).mean()
    assert 0.05 < ink < 1
    text = render(cover, ImageSpec(64, 64, "svg")).decode()
    assert text.count("<rect") == 16 + 1
    path = tmp_path / "c.ppm"
    write_image(path, cover, ImageSpec(64, 64))
    assert path.read_bytes() == render(cover, ImageSpec(64, 64))
