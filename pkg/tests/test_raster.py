import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image
from scipy import ndimage

from linea.raster import (
    binarize,
    distance_transform,
    distance_transform_bruteforce,
    effective_count,
    load_image,
    mask_to_image,
    save_image,
)
from linea.synth import render_circle

masks = st.integers(1, 24).flatmap(
    lambda h: st.integers(1, 24).flatmap(lambda w: arrays(bool, (h, w)))
)


def test_load_endpoints_and_midtone(tmp_path):
    for value, expected in [(255, 1.0), (0, 0.0), (128, 128 / 255)]:
        path = tmp_path / f"v{value}.png"
        Image.fromarray(np.full((4, 5), value, np.uint8), "L").save(path)
        img = load_image(path)
        assert img.shape == (4, 5)
        assert np.all(img == expected)
    assert load_image(tmp_path / "v128.png")[0, 0] == pytest.approx(0.50196, abs=1e-5)


def test_load_rgb_uses_luminance(tmp_path):
    path = tmp_path / "rgb.png"
    Image.fromarray(np.full((2, 2, 3), 255, np.uint8), "RGB").save(path)
    assert np.all(load_image(path) == 1.0)


def test_load_pgm_and_roundtrip(tmp_path):
    data = np.arange(256, dtype=np.uint8).reshape(16, 16)
    img = data / 255.0
    for suffix in (".png", ".pgm"):
        path = tmp_path / f"x{suffix}"
        save_image(img, path)
        assert np.array_equal(load_image(path), img)
    assert (tmp_path / "x.pgm").read_bytes().startswith(b"P5")


def test_load_errors_carry_path(tmp_path):
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"not an image")
    with pytest.raises(OSError, match="bad.png"):
        load_image(bad)
    deep = tmp_path / "deep.png"
    Image.fromarray(np.zeros((2, 2), np.uint16)).save(deep)
    with pytest.raises(OSError, match="deep.png"):
        load_image(deep)


def test_binarize_threshold_is_strict():
    img = np.array([[0.0, 0.94, 0.95, 1.0]])
    assert binarize(img, 0.95).tolist() == [[True, True, False, False]]
    assert not binarize(np.ones((3, 3))).any()
    assert binarize(np.array([[1.0, 0.999]]), 1.0).tolist() == [[False, True]]
    with pytest.raises(ValueError):
        binarize(img, 0.0)


@given(masks)
def test_binarize_inverts_mask_rendering(mask):
    assert np.array_equal(binarize(mask_to_image(mask), 0.95), mask)


def test_effective_count():
    assert effective_count(np.zeros((4, 4), bool)) == 0
    assert effective_count(np.ones((3, 3), bool)) == 9
    ring = render_circle((31.5, 31.5), 10, (64, 64), 1)
    assert effective_count(ring) == sum(1 for v in ring.ravel() if v)


def test_distance_transform_center_pixel():
    m = np.zeros((3, 3), bool)
    m[1, 1] = True
    d = distance_transform(m)
    r2 = np.sqrt(2)
    assert np.allclose(d, [[r2, 1, r2], [1, 0, 1], [r2, 1, r2]], atol=0)


def test_empty_mask_uses_diameter():
    m = np.zeros((10, 10), bool)
    assert np.all(distance_transform(m) == np.sqrt(200))
    assert np.all(distance_transform_bruteforce(m) == np.sqrt(200))


def test_bruteforce_single_pixel_radial():
    m = np.zeros((5, 7), bool)
    m[2, 3] = True
    ys, xs = np.mgrid[0:5, 0:7]
    assert np.allclose(distance_transform_bruteforce(m), np.hypot(ys - 2, xs - 3))


def test_bruteforce_size_guard():
    with pytest.raises(ValueError):
        distance_transform_bruteforce(np.zeros((101, 100), bool))


def test_random_masks_match_bruteforce(rng):
    for _ in range(50):
        m = rng.random((32, 32)) < rng.uniform(0.001, 0.2)
        assert np.abs(distance_transform(m) - distance_transform_bruteforce(m)).max() <= 1e-9


def test_matches_scipy_on_large_mask(rng):
    m = rng.random((200, 150)) < 0.01
    assert np.abs(distance_transform(m) - ndimage.distance_transform_edt(~m)).max() <= 1e-9


@settings(max_examples=60, deadline=None)
@given(masks)
def test_edt_properties(mask):
    d = distance_transform(mask)
    assert np.abs(d - distance_transform_bruteforce(mask)).max() <= 1e-9
    h, w = mask.shape
    assert d.max() <= np.sqrt(h * h + w * w) + 1e-12
    if mask.any():
        assert np.array_equal(d == 0, mask)


@settings(max_examples=40, deadline=None)
@given(masks, st.data())
def test_adding_pixel_never_increases_distance(mask, data):
    h, w = mask.shape
    y = data.draw(st.integers(0, h - 1))
    x = data.draw(st.integers(0, w - 1))
    more = mask.copy()
    more[y, x] = True
    assert np.all(distance_transform(more) <= distance_transform(mask) + 1e-12)
