"""Synthetic line-art scenes with exact ground truth.

Covers the translated/erased circle experiment used to compare chamfer
and weighted chamfer distance, plus translating scenes for end-to-end
inbetweening checks.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .raster import as_mask, effective_count, mask_to_image
from .tps import CorrespondenceSet

MAX_CORR_PAIRS = 512
_NEIGHBOURS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


@dataclass
class SynthScene:
    frames: list[np.ndarray]
    masks: list[np.ndarray]
    exact_corr: CorrespondenceSet
    description: str = ""
    params: dict = field(default_factory=dict)


def render_circle(center, radius: float, size: tuple[int, int], stroke: float = 1.0) -> np.ndarray:
    """Hard-edged annulus: pixel is ink iff ``|dist - radius| <= stroke / 2``.

    ``center`` is ``(x, y)`` and ``size`` is ``(width, height)``.
    """
    cx, cy = map(float, center)
    w, h = size
    if not radius > stroke >= 1:
        raise ValueError(f"need radius > stroke >= 1, got radius={radius}, stroke={stroke}")
    reach = radius + stroke / 2.0
    if cx - reach < 0 or cy - reach < 0 or cx + reach > w - 1 or cy + reach > h - 1:
        raise ValueError(f"circle at ({cx}, {cy}) with radius {radius} leaves the {w}x{h} canvas")
    ys, xs = np.mgrid[0:h, 0:w]
    dist = np.hypot(xs - cx, ys - cy)
    return np.abs(dist - radius) <= stroke / 2.0


def render_polyline(points, size: tuple[int, int], stroke: float = 1.0, closed: bool = False) -> np.ndarray:
    """Ink every pixel within ``stroke / 2`` of the polyline through ``points``."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise ValueError("polyline needs at least two (x, y) points")
    w, h = size
    if (pts < 0).any() or (pts[:, 0] > w - 1).any() or (pts[:, 1] > h - 1).any():
        raise ValueError("polyline leaves the canvas")
    if closed:
        pts = np.vstack([pts, pts[:1]])
    ys, xs = np.mgrid[0:h, 0:w]
    grid = np.stack([xs, ys], axis=-1).astype(np.float64)
    best = np.full((h, w), np.inf)
    for a, b in zip(pts[:-1], pts[1:]):
        ab = b - a
        denom = float(ab @ ab)
        if denom == 0:
            t = np.zeros((h, w))
        else:
            t = np.clip(((grid - a) @ ab) / denom, 0.0, 1.0)
        proj = a + t[..., None] * ab
        best = np.minimum(best, np.linalg.norm(grid - proj, axis=-1))
    return best <= stroke / 2.0


def shift_mask(mask, d: tuple[int, int]) -> np.ndarray:
    """Integer translation by ``(dx, dy)``; pixels pushed off the canvas are lost."""
    mask = as_mask(mask)
    dx, dy = int(d[0]), int(d[1])
    h, w = mask.shape
    out = np.zeros_like(mask)
    if abs(dx) >= w or abs(dy) >= h:
        return out
    src = mask[max(0, -dy):h - max(0, dy), max(0, -dx):w - max(0, dx)]
    out[max(0, dy):max(0, dy) + src.shape[0], max(0, dx):max(0, dx) + src.shape[1]] = src
    return out


def stroke_order(mask) -> np.ndarray:
    """Effective pixels as ``(row, col)`` in a walk along 8-connected strokes.

    Components are visited in raster order of their first pixel.  Inside a
    component the walk steps to the unvisited neighbour with the fewest
    unvisited neighbours of its own and jumps to the nearest unvisited pixel
    when stuck.
    """
    mask = as_mask(mask)
    labels, n = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    order: list[tuple[int, int]] = []
    for lab in range(1, n + 1):
        ys, xs = np.nonzero(labels == lab)
        remaining = set(zip(ys.tolist(), xs.tolist()))

        def free_neighbours(p):
            return [(p[0] + a, p[1] + b) for a, b in _NEIGHBOURS if (p[0] + a, p[1] + b) in remaining]

        cur = (int(ys[0]), int(xs[0]))
        while True:
            remaining.discard(cur)
            order.append(cur)
            if not remaining:
                break
            nbrs = free_neighbours(cur)
            if nbrs:
                cur = min(nbrs, key=lambda p: (len(free_neighbours(p)), p))
            else:
                cur = min(remaining, key=lambda p: ((p[0] - cur[0]) ** 2 + (p[1] - cur[1]) ** 2, p))
    return np.array(order, dtype=np.int64).reshape(-1, 2)


def erase_random(mask, fraction: float, seed: int = 0, run_length: int = 4) -> np.ndarray:
    """Remove ``floor(fraction * count)`` ink pixels as contiguous stroke runs.

    The erased pixels form runs of about ``run_length`` pixels along the
    stroke walk, spread evenly around it; the seed picks the phase and which
    runs/gaps absorb the rounding remainder.
    """
    if not 0.0 <= fraction < 1.0:
        raise ValueError(f"fraction must be in [0, 1), got {fraction}")
    if run_length < 1:
        raise ValueError("run_length must be >= 1")
    mask = as_mask(mask)
    out = mask.copy()
    order = stroke_order(mask)
    n = len(order)
    n_remove = int(np.floor(fraction * n))
    if n_remove == 0:
        return out
    rng = np.random.default_rng(seed)
    k = max(1, min(int(round(n_remove / run_length)), n - n_remove))
    runs = _split(n_remove, k, rng)
    gaps = _split(n - n_remove, k, rng)
    pos = int(rng.integers(n))
    for run, gap in zip(runs, gaps):
        idx = (pos + np.arange(run)) % n
        out[order[idx, 0], order[idx, 1]] = False
        pos += run + gap
    return out


def _split(total: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """``total`` as ``k`` near-equal parts, remainder placed at random."""
    parts = np.full(k, total // k, dtype=np.int64)
    parts[rng.permutation(k)[: total % k]] += 1
    return parts


def _even_subsample(n: int, k: int) -> np.ndarray:
    if n <= k:
        return np.arange(n)
    return np.floor(np.arange(k) * (n / k)).astype(np.int64)


def translating_scene(shape, d: tuple[int, int], n: int) -> SynthScene:
    """``n + 2`` frames moving ``shape`` by ``d`` in equal steps (rounded to whole pixels)."""
    if n < 1:
        raise ValueError(f"need at least one intermediate frame, got {n}")
    shape = as_mask(shape)
    count = effective_count(shape)
    if count == 0:
        raise ValueError("shape mask is empty")
    dx, dy = d
    masks = []
    for k in range(n + 2):
        off = (int(round(k * dx / (n + 1))), int(round(k * dy / (n + 1))))
        m = shift_mask(shape, off)
        if effective_count(m) != count:
            raise ValueError(f"shape leaves the canvas at offset {off}")
        masks.append(m)
    order = stroke_order(shape)
    pick = order[_even_subsample(len(order), MAX_CORR_PAIRS)]
    src = pick[:, ::-1].astype(np.float64)
    h, w = shape.shape
    corr = CorrespondenceSet(src, src + np.array([dx, dy], dtype=np.float64), (w, h), (w, h))
    return SynthScene(
        frames=[mask_to_image(m) for m in masks],
        masks=masks,
        exact_corr=corr,
        description=f"shape translated by ({dx}, {dy}) over {n} inbetweens",
        params={"d": [dx, dy], "n": n},
    )


def circle_shift_experiment(size: int = 128, radius: float = 20.0, stroke: float = 2.0,
                            shifts=(0, 2, 4, 6, 8, 10), erasures=(0.0, 0.1, 0.2, 0.3),
                            erase_shift: int | None = None, seed: int = 0, wcd_cfg=None) -> list[dict]:
    """CD and WCD of a translated (and partly erased) circle against the original.

    One row per shift with no erasure, then one row per erasure fraction at
    ``erase_shift`` (the largest shift by default).
    """
    from .metrics import chamfer_distance, weighted_chamfer_distance

    c = (size - 1) / 2.0
    gt = render_circle((c, c), radius, (size, size), stroke)
    rows = []
    for s in shifts:
        pred = shift_mask(gt, (s, 0))
        rows.append({"shift": s, "erase": 0.0, "count": effective_count(pred),
                     "cd": chamfer_distance(pred, gt), "wcd": weighted_chamfer_distance(pred, gt, wcd_cfg)})
    s = max(shifts) if erase_shift is None else erase_shift
    base = shift_mask(gt, (s, 0))
    for f in erasures:
        pred = erase_random(base, f, seed)
        rows.append({"shift": s, "erase": f, "count": effective_count(pred),
                     "cd": chamfer_distance(pred, gt), "wcd": weighted_chamfer_distance(pred, gt, wcd_cfg)})
    return rows
