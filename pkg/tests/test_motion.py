import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linea.metrics import chamfer_distance
from linea.motion import (
    WarpConfig,
    backward_warp,
    blend,
    frame_times,
    inbetween_variants,
    intermediate_flows,
    interpolate_sequence,
)
from linea.raster import binarize
from linea.synth import render_circle, translating_scene
from linea.tps import CorrespondenceSet


def test_intermediate_flow_endpoints(rng):
    m01 = rng.normal(size=(5, 6, 2))
    m10 = rng.normal(size=(5, 6, 2))
    t0, t1 = intermediate_flows(m01, m10, 0.0)
    assert np.all(t0 == 0) and np.array_equal(t1, m01)
    t0, t1 = intermediate_flows(m01, m10, 1.0)
    assert np.array_equal(t0, m10) and np.all(t1 == 0)


def test_intermediate_flow_midpoint_constant():
    m01 = np.broadcast_to([4.0, 0.0], (3, 3, 2))
    m10 = np.broadcast_to([-4.0, 0.0], (3, 3, 2))
    t0, t1 = intermediate_flows(m01, m10, 0.5)
    assert np.all(t0 == [-2.0, 0.0]) and np.all(t1 == [2.0, 0.0])


def test_intermediate_flow_errors():
    with pytest.raises(ValueError):
        intermediate_flows(np.zeros((2, 2, 2)), np.zeros((2, 3, 2)), 0.5)
    with pytest.raises(ValueError):
        intermediate_flows(np.zeros((2, 2, 2)), np.zeros((2, 2, 2)), 1.5)


def test_zero_flow_warp_is_exact(rng):
    img = rng.random((7, 9))
    assert np.array_equal(backward_warp(img, np.zeros((7, 9, 2))), img)


def test_integer_shift_warp(rng):
    img = rng.random((6, 8))
    flow = np.zeros((6, 8, 2))
    flow[..., 0] = 2
    out = backward_warp(img, flow, WarpConfig(fill=0.25))
    assert np.array_equal(out[:, :-2], img[:, 2:])
    assert np.all(out[:, -2:] == 0.25)


def test_bilinear_midpoint():
    img = np.array([[0.0, 1.0]])
    flow = np.zeros((1, 2, 2))
    flow[0, 0, 0] = 0.5
    assert backward_warp(img, flow)[0, 0] == pytest.approx(0.5)


def test_warp_dimension_mismatch():
    with pytest.raises(ValueError):
        backward_warp(np.ones((4, 4)), np.zeros((4, 5, 2)))


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 1), st.integers(0, 2**31 - 1))
def test_warp_of_constant_is_constant(c, seed):
    flow = np.random.default_rng(seed).normal(0, 6, (8, 8, 2))
    out = backward_warp(np.full((8, 8), c), flow, WarpConfig(fill=c))
    assert np.allclose(out, c, atol=1e-12)


def test_warp_is_linear(rng):
    a, b = 0.3, 0.6
    i1, i2 = rng.random((10, 12)), rng.random((10, 12))
    flow = rng.normal(0, 4, (10, 12, 2))
    cfg = WarpConfig(fill=0.0)
    lhs = backward_warp(a * i1 + b * i2, flow, cfg)
    rhs = a * backward_warp(i1, flow, cfg) + b * backward_warp(i2, flow, cfg)
    assert np.abs(lhs - rhs).max() <= 1e-12


def test_blend_modes(rng):
    f0 = rng.random((4, 4))
    f1 = rng.random((4, 4))
    assert np.array_equal(blend(f0, f1, 0.0), f0)
    for mode in ("linear", "min-ink"):
        assert np.allclose(blend(f0, f0, 0.3, mode), f0)
    white, black = np.ones((3, 3)), np.zeros((3, 3))
    assert np.allclose(blend(white, black, 0.25), 0.75)
    assert np.all(blend(white, black, 0.25, "min-ink") == 0.0)
    with pytest.raises(ValueError):
        blend(white, np.ones((2, 2)), 0.5)
    with pytest.raises(ValueError):
        WarpConfig(blend_mode="max")


def test_frame_times():
    assert frame_times(1) == [0.5]
    assert frame_times(5) == pytest.approx([1 / 6, 2 / 6, 3 / 6, 4 / 6, 5 / 6])
    with pytest.raises(ValueError):
        frame_times(0)


def test_stationary_scene(rng):
    ring = render_circle((31.5, 31.5), 12, (64, 64), 2)
    y0 = np.where(ring, 0.0, 1.0)
    pts = rng.random((10, 2)) * 63
    corr = CorrespondenceSet(pts, pts, (64, 64), (64, 64))
    for n in (1, 3):
        for frame in interpolate_sequence(y0, y0, corr, n):
            assert np.abs(frame - y0).max() <= 1e-6


def _scene(d, n, size=128, radius=20):
    c = (size - 1) / 2
    return translating_scene(render_circle((c - d[0] / 2, c), radius, (size, size), 2), d, n)


def test_translating_circle_midpoint_centroid():
    scene = _scene((12, 0), 1)
    mid = interpolate_sequence(scene.frames[0], scene.frames[-1], scene.exact_corr, 1)[0]
    ys, xs = np.nonzero(binarize(mid))
    gys, gxs = np.nonzero(scene.masks[1])
    assert abs(xs.mean() - gxs.mean()) <= 1 and abs(ys.mean() - gys.mean()) <= 1


def test_translating_circle_beats_static_baseline():
    scene = _scene((12, 0), 5)
    frames = interpolate_sequence(scene.frames[0], scene.frames[-1], scene.exact_corr, 5)
    for k, frame in enumerate(frames, start=1):
        gt = scene.masks[k]
        assert chamfer_distance(binarize(frame), gt) < chamfer_distance(scene.masks[0], gt)


def test_variants_and_temporal_flip():
    scene = _scene((10, 4), 3)
    y0, y1 = scene.frames[0], scene.frames[-1]
    fwd = inbetween_variants(y0, y1, scene.exact_corr, 3)
    rev = inbetween_variants(y1, y0, scene.exact_corr.reversed(), 3)
    assert set(fwd) == {"forward", "backward", "blend"}
    for a, b in zip(fwd["blend"], rev["blend"][::-1]):
        assert np.abs(a - b).max() <= 1e-6
    for a, b in zip(fwd["forward"], rev["backward"][::-1]):
        assert np.abs(a - b).max() <= 1e-6
