"""Correspondence files and a simple deterministic keypoint matcher.

The matcher is a convenience fallback for frames without externally
produced correspondences.  It finds Harris corners on the clipped distance
transform of each binarized frame, describes them by normalised distance
patches, and keeps mutual nearest neighbours that pass a ratio test.
"""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage
from scipy.spatial.distance import cdist

from .raster import DEFAULT_THRESHOLD, as_image, binarize, distance_transform
from .tps import CorrespondenceSet

log = logging.getLogger(__name__)

FORMAT_VERSION = 1


class CorrespondenceFormatError(ValueError):
    pass


class InsufficientMatchesError(RuntimeError):
    pass


@dataclass(frozen=True)
class MatchConfig:
    max_keypoints: int = 512
    patch_radius: int = 8
    ratio_threshold: float = 0.8
    max_displacement: float | None = None
    threshold: float = DEFAULT_THRESHOLD
    harris_k: float = 0.05
    harris_sigma: float = 1.5
    min_response: float = 0.01  # relative to the strongest corner

    def __post_init__(self):
        if self.max_keypoints < 3:
            raise ValueError("max_keypoints must be >= 3")
        if self.patch_radius < 1:
            raise ValueError("patch_radius must be >= 1")
        if not 0.0 < self.ratio_threshold <= 1.0:
            raise ValueError("ratio_threshold must be in (0, 1]")


# --- file format -----------------------------------------------------------

def _field_error(path, where, msg):
    return CorrespondenceFormatError(f"{path}: field {where}: {msg}")


def _parse_dims(doc, key, path):
    dims = doc.get(key)
    if (not isinstance(dims, list) or len(dims) != 2
            or not all(isinstance(v, int) and not isinstance(v, bool) and v > 0 for v in dims)):
        raise _field_error(path, key, "expected [width, height] positive integers")
    return tuple(dims)


def _parse_point(value, path, where):
    if (not isinstance(value, list) or len(value) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        raise _field_error(path, where, "expected [x, y] numbers")
    if not all(np.isfinite(value)):
        raise _field_error(path, where, "coordinates must be finite")
    return [float(value[0]), float(value[1])]


def _clamp(points: np.ndarray, dims) -> tuple[np.ndarray, np.ndarray]:
    w, h = dims
    hi = np.array([w - 1, h - 1], dtype=np.float64)
    clamped = np.clip(points, 0.0, hi)
    return clamped, (clamped != points).any(axis=1)


def read_correspondences(path: str | os.PathLike, dims0=None, dims1=None) -> CorrespondenceSet:
    """Load a correspondence file, clamping out-of-bounds points into the images.

    ``dims0``/``dims1`` are ``(width, height)`` and default to the dims
    recorded in the file.  The number of pairs that needed clamping is
    logged and kept on the result as ``clamped``.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorrespondenceFormatError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise _field_error(path, "<root>", "expected an object")
    if doc.get("version") != FORMAT_VERSION:
        raise _field_error(path, "version", f"expected {FORMAT_VERSION}, got {doc.get('version')!r}")
    file_d0 = _parse_dims(doc, "source_dims", path)
    file_d1 = _parse_dims(doc, "target_dims", path)
    d0 = tuple(dims0) if dims0 is not None else file_d0
    d1 = tuple(dims1) if dims1 is not None else file_d1
    pairs = doc.get("pairs")
    if not isinstance(pairs, list):
        raise _field_error(path, "pairs", "expected a list")
    src, dst = [], []
    for i, pair in enumerate(pairs):
        if not isinstance(pair, list) or len(pair) != 2:
            raise _field_error(path, f"pairs[{i}]", "expected [[x0, y0], [x1, y1]]")
        src.append(_parse_point(pair[0], path, f"pairs[{i}][0]"))
        dst.append(_parse_point(pair[1], path, f"pairs[{i}][1]"))
    src = np.array(src, dtype=np.float64).reshape(-1, 2)
    dst = np.array(dst, dtype=np.float64).reshape(-1, 2)
    src, out0 = _clamp(src, d0)
    dst, out1 = _clamp(dst, d1)
    moved = out0 | out1
    if len(src) and moved.all():
        raise CorrespondenceFormatError(f"{path}: every correspondence lies outside the image bounds")
    n_clamped = int(moved.sum())
    if n_clamped:
        log.warning("%s: clamped %d correspondence(s) into image bounds", path, n_clamped)
    return CorrespondenceSet(src, dst, d0, d1, clamped=n_clamped)


def canonical_order(corr: CorrespondenceSet) -> np.ndarray:
    """Pair indices sorted by source x, then source y, then target x, y."""
    s, t = corr.source, corr.target
    if len(s) == 0:
        return np.zeros(0, dtype=np.int64)
    return np.lexsort((t[:, 1], t[:, 0], s[:, 1], s[:, 0]))


def dumps_correspondences(corr: CorrespondenceSet) -> str:
    order = canonical_order(corr)
    lines = [
        "{",
        f'  "version": {FORMAT_VERSION},',
        f'  "source_dims": {json.dumps(list(corr.source_dims))},',
        f'  "target_dims": {json.dumps(list(corr.target_dims))},',
    ]
    pairs = [
        json.dumps([[float(corr.source[i, 0]), float(corr.source[i, 1])],
                    [float(corr.target[i, 0]), float(corr.target[i, 1])]])
        for i in order
    ]
    if pairs:
        lines.append('  "pairs": [')
        lines.append(",\n".join("    " + p for p in pairs))
        lines.append("  ]")
    else:
        lines.append('  "pairs": []')
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_correspondences(corr: CorrespondenceSet, path: str | os.PathLike) -> None:
    Path(path).write_text(dumps_correspondences(corr), encoding="utf-8")


# --- fallback matcher ------------------------------------------------------

def _dt_surface(img, cfg: MatchConfig) -> np.ndarray:
    mask = binarize(img, cfg.threshold)
    if not mask.any():
        return np.ones(mask.shape)
    clip = 2.0 * cfg.patch_radius
    return np.minimum(distance_transform(mask), clip) / clip


def harris_response(surface: np.ndarray, sigma: float = 1.5, k: float = 0.05) -> np.ndarray:
    gy, gx = np.gradient(surface)
    sxx = ndimage.gaussian_filter(gx * gx, sigma)
    syy = ndimage.gaussian_filter(gy * gy, sigma)
    sxy = ndimage.gaussian_filter(gx * gy, sigma)
    return sxx * syy - sxy * sxy - k * (sxx + syy) ** 2


def detect_keypoints(surface: np.ndarray, cfg: MatchConfig) -> np.ndarray:
    """Top-k local maxima of the Harris response as ``(row, col)``, strongest first."""
    resp = harris_response(surface, cfg.harris_sigma, cfg.harris_k)
    top = resp.max()
    if not top > 0:
        return np.zeros((0, 2), dtype=np.int64)
    peaks = (resp == ndimage.maximum_filter(resp, size=5, mode="nearest")) & (resp > cfg.min_response * top)
    rows, cols = np.nonzero(peaks)
    order = np.lexsort((cols, rows, -resp[rows, cols]))[: cfg.max_keypoints]
    return np.stack([rows[order], cols[order]], axis=1)


def describe(surface: np.ndarray, keypoints: np.ndarray, radius: int) -> tuple[np.ndarray, np.ndarray]:
    """Zero-mean, unit-norm distance patches; drops keypoints with flat patches."""
    padded = np.pad(surface, radius, mode="constant", constant_values=1.0)
    size = 2 * radius + 1
    descs, keep = [], []
    for i, (r, c) in enumerate(keypoints):
        patch = padded[r:r + size, c:c + size].ravel()
        patch = patch - patch.mean()
        norm = np.linalg.norm(patch)
        if norm > 1e-12:
            descs.append(patch / norm)
            keep.append(i)
    if not descs:
        return np.zeros((0, size * size)), np.zeros(0, dtype=np.int64)
    return np.array(descs), np.array(keep, dtype=np.int64)


def fallback_match(y0, y1, cfg: MatchConfig | None = None) -> CorrespondenceSet:
    """Match keypoints between two frames; raises if fewer than 3 pairs survive."""
    cfg = cfg or MatchConfig()
    y0, y1 = as_image(y0), as_image(y1)
    if y0.shape != y1.shape:
        raise ValueError(f"frames differ in shape: {y0.shape} vs {y1.shape}")
    h, w = y0.shape
    s0, s1 = _dt_surface(y0, cfg), _dt_surface(y1, cfg)
    k0, k1 = detect_keypoints(s0, cfg), detect_keypoints(s1, cfg)
    d0, i0 = describe(s0, k0, cfg.patch_radius)
    d1, i1 = describe(s1, k1, cfg.patch_radius)
    k0, k1 = k0[i0], k1[i1]

    src, dst = [], []
    if len(k0) and len(k1):
        dist = cdist(d0, d1)
        fwd = dist.argmin(axis=1)
        back = dist.argmin(axis=0)
        for i, j in enumerate(fwd):
            if back[j] != i:
                continue
            if dist.shape[1] > 1:
                second = np.partition(dist[i], 1)[1]
                if not dist[i, j] < cfg.ratio_threshold * second:
                    continue
            p0 = k0[i][::-1].astype(np.float64)
            p1 = k1[j][::-1].astype(np.float64)
            if cfg.max_displacement is not None and np.hypot(*(p1 - p0)) > cfg.max_displacement:
                continue
            src.append(p0)
            dst.append(p1)
    if len(src) < 3:
        raise InsufficientMatchesError(
            f"fallback matcher found {len(src)} reliable match(es), need at least 3; "
            "supply correspondences from an external matcher"
        )
    corr = CorrespondenceSet(np.array(src), np.array(dst), (w, h), (w, h))
    order = canonical_order(corr)
    return CorrespondenceSet(corr.source[order], corr.target[order], (w, h), (w, h))
