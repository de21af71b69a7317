"""Intermediate flows, backward warping and blending: the TPS-only inbetweener."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import as_image
from .tps import CorrespondenceSet, fit_tps, motion_field

BLEND_MODES = ("linear", "min-ink")
VARIANTS = ("forward", "backward", "blend")


@dataclass(frozen=True)
class WarpConfig:
    fill: float = 1.0
    blend_mode: str = "linear"

    def __post_init__(self):
        if not 0.0 <= self.fill <= 1.0:
            raise ValueError(f"fill must be in [0, 1], got {self.fill}")
        if self.blend_mode not in BLEND_MODES:
            raise ValueError(f"blend_mode must be one of {BLEND_MODES}, got {self.blend_mode!r}")


def _as_flow(flow) -> np.ndarray:
    arr = np.asarray(flow, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValueError(f"motion field must have shape (H, W, 2), got {arr.shape}")
    return arr


def _check_time(t: float) -> None:
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must be in [0, 1], got {t}")


def intermediate_flows(m01, m10, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Approximate the flows from time ``t`` back to frames 0 and 1.

    Linear-motion model: ``m_t0 = -(1-t) t m01 + t^2 m10`` and
    ``m_t1 = (1-t)^2 m01 - t (1-t) m10``.
    """
    m01, m10 = _as_flow(m01), _as_flow(m10)
    if m01.shape != m10.shape:
        raise ValueError(f"flow shapes differ: {m01.shape} vs {m10.shape}")
    _check_time(t)
    s = 1.0 - t
    m_t0 = -(s * t) * m01 + (t * t) * m10
    m_t1 = (s * s) * m01 - (t * s) * m10
    return m_t0, m_t1


def backward_warp(img, flow, cfg: WarpConfig | None = None) -> np.ndarray:
    """Bilinearly sample ``img`` at ``(x + dx, y + dy)`` for every output pixel.

    Neighbours outside the image read as ``cfg.fill``.
    """
    cfg = cfg or WarpConfig()
    img = as_image(img)
    flow = _as_flow(flow)
    h, w = img.shape
    if flow.shape[:2] != (h, w):
        raise ValueError(f"flow {flow.shape[:2]} does not match image {img.shape}")
    ys, xs = np.mgrid[0:h, 0:w]
    sx = xs + flow[..., 0]
    sy = ys + flow[..., 1]
    x0 = np.floor(sx)
    y0 = np.floor(sy)
    fx = sx - x0
    fy = sy - y0
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)

    def tap(yy, xx):
        inside = (xx >= 0) & (xx < w) & (yy >= 0) & (yy < h)
        vals = np.full(xx.shape, cfg.fill)
        vals[inside] = img[yy[inside], xx[inside]]
        return vals

    out = (
        (1 - fx) * (1 - fy) * tap(y0, x0)
        + fx * (1 - fy) * tap(y0, x0 + 1)
        + (1 - fx) * fy * tap(y0 + 1, x0)
        + fx * fy * tap(y0 + 1, x0 + 1)
    )
    # convex weights can round a hair past [0, 1]
    return np.clip(out, 0.0, 1.0, out=out)


def blend(f0t, f1t, t: float, mode: str = "linear") -> np.ndarray:
    """Combine the two aligned frames; ``min-ink`` keeps the darker pixel."""
    f0t, f1t = as_image(f0t), as_image(f1t)
    if f0t.shape != f1t.shape:
        raise ValueError(f"frame shapes differ: {f0t.shape} vs {f1t.shape}")
    _check_time(t)
    if mode == "linear":
        return (1.0 - t) * f0t + t * f1t
    if mode == "min-ink":
        return np.minimum(f0t, f1t)
    raise ValueError(f"unknown blend mode {mode!r}")


def frame_times(n: int) -> list[float]:
    """Uniform times ``k / (n + 1)`` for ``k = 1..n``."""
    if n < 1:
        raise ValueError(f"need at least one intermediate frame, got {n}")
    return [k / (n + 1) for k in range(1, n + 1)]


def bidirectional_fields(corr: CorrespondenceSet, width: int, height: int, lam: float = 0.0):
    """Fit both spline directions and return ``(m01, m10)``."""
    fwd = fit_tps(corr, lam)
    bwd = fit_tps(corr.reversed(), lam)
    return motion_field(fwd, width, height), motion_field(bwd, width, height)


def inbetween_variants(y0, y1, corr: CorrespondenceSet, n: int,
                       cfg: WarpConfig | None = None, lam: float = 0.0) -> dict[str, list[np.ndarray]]:
    """All ``n`` inbetweens as ``forward`` (warped frame 0), ``backward`` (warped frame 1) and ``blend``."""
    cfg = cfg or WarpConfig()
    y0, y1 = as_image(y0), as_image(y1)
    if y0.shape != y1.shape:
        raise ValueError(f"key frames differ in shape: {y0.shape} vs {y1.shape}")
    h, w = y0.shape
    times = frame_times(n)
    m01, m10 = bidirectional_fields(corr, w, h, lam)
    out: dict[str, list[np.ndarray]] = {v: [] for v in VARIANTS}
    for t in times:
        m_t0, m_t1 = intermediate_flows(m01, m10, t)
        f0t = backward_warp(y0, m_t0, cfg)
        f1t = backward_warp(y1, m_t1, cfg)
        out["forward"].append(f0t)
        out["backward"].append(f1t)
        out["blend"].append(np.clip(blend(f0t, f1t, t, cfg.blend_mode), 0.0, 1.0))
    return out


def interpolate_sequence(y0, y1, corr: CorrespondenceSet, n: int,
                         cfg: WarpConfig | None = None, lam: float = 0.0) -> list[np.ndarray]:
    """Blended TPS-only inbetweens at ``t = k / (n + 1)``."""
    return inbetween_variants(y0, y1, corr, n, cfg, lam)["blend"]
