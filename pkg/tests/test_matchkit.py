import json

import numpy as np
import pytest

from linea.matchkit import (
    CorrespondenceFormatError,
    InsufficientMatchesError,
    MatchConfig,
    describe,
    dumps_correspondences,
    fallback_match,
    read_correspondences,
    write_correspondences,
    _dt_surface,
    detect_keypoints,
)
from linea.raster import mask_to_image
from linea.synth import render_polyline, shift_mask
from linea.tps import CorrespondenceSet


def polyline_scene(size=128):
    pts = [(20, 30), (60, 25), (90, 70), (50, 100), (30, 80)]
    m = render_polyline(pts, (size, size), 2, closed=True)
    return m | render_polyline([(60, 25), (50, 100)], (size, size), 2)


def write_doc(path, doc):
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def test_read_single_pair(tmp_path):
    p = write_doc(tmp_path / "c.json", {"version": 1, "source_dims": [10, 10], "target_dims": [10, 10],
                                        "pairs": [[[0, 0], [3, 1]]]})
    c = read_correspondences(p)
    assert len(c) == 1 and c.clamped == 0
    assert c.source.tolist() == [[0, 0]] and c.target.tolist() == [[3, 1]]


def test_roundtrip_is_lossless(tmp_path, rng):
    src = rng.random((3, 2)) * 50
    dst = rng.random((3, 2)) * 50 + 1e-7
    c = CorrespondenceSet(src, dst, (64, 60), (64, 60))
    write_correspondences(c, tmp_path / "c.json")
    back = read_correspondences(tmp_path / "c.json")
    order = np.lexsort((src[:, 1], src[:, 0]))
    assert np.abs(back.source - src[order]).max() <= 1e-9
    assert np.abs(back.target - dst[order]).max() <= 1e-9
    assert back.source_dims == (64, 60)
    # canonical text is stable under re-serialisation
    assert dumps_correspondences(back) == (tmp_path / "c.json").read_text()


def test_empty_set(tmp_path):
    c = CorrespondenceSet(np.zeros((0, 2)), np.zeros((0, 2)), (4, 4), (4, 4))
    write_correspondences(c, tmp_path / "e.json")
    doc = json.loads((tmp_path / "e.json").read_text())
    assert doc["pairs"] == [] and doc["version"] == 1
    assert len(read_correspondences(tmp_path / "e.json")) == 0


def test_clamping(tmp_path, caplog):
    w = 20
    p = write_doc(tmp_path / "c.json", {"version": 1, "source_dims": [w, 10], "target_dims": [w, 10],
                                        "pairs": [[[w + 5, 0], [1, 1]], [[2, 2], [3, 3]]]})
    c = read_correspondences(p)
    assert c.source[0].tolist() == [w - 1, 0]
    assert c.clamped == 1
    assert "clamped 1" in caplog.text


def test_all_out_of_bounds(tmp_path):
    p = write_doc(tmp_path / "c.json", {"version": 1, "source_dims": [5, 5], "target_dims": [5, 5],
                                        "pairs": [[[9, 9], [1, 1]]]})
    with pytest.raises(CorrespondenceFormatError, match="outside"):
        read_correspondences(p)


@pytest.mark.parametrize("doc, where", [
    ({"version": 2, "source_dims": [5, 5], "target_dims": [5, 5], "pairs": []}, "version"),
    ({"version": 1, "source_dims": [5], "target_dims": [5, 5], "pairs": []}, "source_dims"),
    ({"version": 1, "source_dims": [5, 5], "target_dims": [5, 5], "pairs": {}}, "pairs"),
    ({"version": 1, "source_dims": [5, 5], "target_dims": [5, 5], "pairs": [[[0, 0], [1, "x"]]]}, r"pairs\[0\]\[1\]"),
])
def test_schema_errors_name_field(tmp_path, doc, where):
    p = write_doc(tmp_path / "c.json", doc)
    with pytest.raises(CorrespondenceFormatError, match=where):
        read_correspondences(p)


def test_malformed_json_reports_line(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{\n  "version": 1,\n  "pairs": [\n}\n')
    with pytest.raises(CorrespondenceFormatError, match="line 4"):
        read_correspondences(p)


def test_identical_frames_match_in_place():
    y = mask_to_image(polyline_scene())
    c = fallback_match(y, y)
    assert len(c) >= 3
    assert np.abs(c.target - c.source).max() < 1


def test_translated_frames():
    m = polyline_scene()
    c = fallback_match(mask_to_image(m), mask_to_image(shift_mask(m, (7, 0))))
    assert len(c) >= 3
    assert np.allclose(np.median(c.target - c.source, axis=0), (7, 0), atol=1)


def test_matches_are_mutual_nearest_and_in_bounds():
    m = polyline_scene()
    y0, y1 = mask_to_image(m), mask_to_image(shift_mask(m, (5, 3)))
    cfg = MatchConfig()
    c = fallback_match(y0, y1, cfg)
    s0, s1 = _dt_surface(y0, cfg), _dt_surface(y1, cfg)
    k0, k1 = detect_keypoints(s0, cfg), detect_keypoints(s1, cfg)
    d0, i0 = describe(s0, k0, cfg.patch_radius)
    d1, i1 = describe(s1, k1, cfg.patch_radius)
    pts0 = k0[i0][:, ::-1].astype(float)
    pts1 = k1[i1][:, ::-1].astype(float)
    dist = np.linalg.norm(d0[:, None] - d1[None], axis=-1)
    for p, q in zip(c.source, c.target):
        i = int(np.flatnonzero((pts0 == p).all(axis=1))[0])
        j = int(np.flatnonzero((pts1 == q).all(axis=1))[0])
        assert dist[i].argmin() == j and dist[:, j].argmin() == i
    assert (c.source >= 0).all() and (c.source[:, 0] <= 127).all() and (c.source[:, 1] <= 127).all()
    assert (c.target >= 0).all() and (c.target[:, 0] <= 127).all() and (c.target[:, 1] <= 127).all()


def test_max_displacement_filter():
    m = polyline_scene()
    with pytest.raises(InsufficientMatchesError):
        fallback_match(mask_to_image(m), mask_to_image(shift_mask(m, (7, 0))), MatchConfig(max_displacement=3))


def test_deterministic():
    m = polyline_scene()
    y0, y1 = mask_to_image(m), mask_to_image(shift_mask(m, (4, -2)))
    assert dumps_correspondences(fallback_match(y0, y1)) == dumps_correspondences(fallback_match(y0, y1))


def test_blank_frames_fail():
    with pytest.raises(InsufficientMatchesError, match="external"):
        fallback_match(np.ones((64, 64)), np.ones((64, 64)))


def test_config_validation():
    with pytest.raises(ValueError):
        MatchConfig(max_keypoints=2)
    with pytest.raises(ValueError):
        MatchConfig(patch_radius=0)
    with pytest.raises(ValueError):
        MatchConfig(ratio_threshold=0)
