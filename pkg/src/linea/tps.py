"""Thin-plate spline fitting between matched keypoints and dense motion fields.

Points are ``(x, y)`` rows with x = column and y = row, origin at the
top-left pixel center.  A motion field is an ``(H, W, 2)`` array of
``(dx, dy)`` displacements: pixel ``(x, y)`` corresponds to
``(x + dx, y + dy)`` in the other frame.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

MAX_CONTROLS = 5000
RCOND_LIMIT = 1e-13
MIN_SEPARATION = 1e-9


class TPSError(ValueError):
    """Base class for fitting failures."""


class InsufficientPointsError(TPSError):
    pass


class DegenerateConfigurationError(TPSError):
    pass


def as_points(points) -> np.ndarray:
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 1 and arr.size == 2:
        arr = arr.reshape(1, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"points must have shape (n, 2), got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("points must be finite")
    return arr


@dataclass(frozen=True)
class CorrespondenceSet:
    """Matched keypoints: ``source[i]`` in frame 0 pairs with ``target[i]`` in frame 1.

    Dimensions are ``(width, height)``.
    """

    source: np.ndarray
    target: np.ndarray
    source_dims: tuple[int, int]
    target_dims: tuple[int, int]
    clamped: int = field(default=0, compare=False)  # pairs moved into bounds on ingest

    def __post_init__(self):
        src = as_points(self.source) if len(self.source) else np.zeros((0, 2))
        dst = as_points(self.target) if len(self.target) else np.zeros((0, 2))
        if src.shape != dst.shape:
            raise ValueError(f"source/target length mismatch: {len(src)} vs {len(dst)}")
        object.__setattr__(self, "source", src)
        object.__setattr__(self, "target", dst)
        object.__setattr__(self, "source_dims", tuple(int(v) for v in self.source_dims))
        object.__setattr__(self, "target_dims", tuple(int(v) for v in self.target_dims))

    def __len__(self) -> int:
        return len(self.source)

    def reversed(self) -> "CorrespondenceSet":
        return CorrespondenceSet(self.target, self.source, self.target_dims, self.source_dims)


def tps_kernel(r) -> np.ndarray:
    """``r**2 * log(r)`` with the removable singularity at 0 set to 0."""
    r = np.asarray(r, dtype=np.float64)
    out = np.zeros_like(r)
    nz = r > 0
    rn = r[nz]
    out[nz] = rn * rn * np.log(rn)
    return out


def _pairwise(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


@dataclass(frozen=True)
class TpsTransform:
    """Fitted spline ``F(p) = A @ [x, y, 1] + sum_i W[i] * U(|c_i - p|)``."""

    affine: np.ndarray  # (2, 3)
    weights: np.ndarray  # (n, 2)
    controls: np.ndarray  # (n, 2)
    lam: float = 0.0
    rcond: float = field(default=np.nan, compare=False)

    def __call__(self, points) -> np.ndarray:
        return eval_tps(self, points)


def identity_tps(controls) -> TpsTransform:
    controls = as_points(controls)
    return TpsTransform(
        affine=np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
        weights=np.zeros_like(controls),
        controls=controls,
    )


def fit_tps(corr: CorrespondenceSet, lam: float = 0.0) -> TpsTransform:
    """Solve the bordered TPS system mapping ``corr.source`` onto ``corr.target``.

    ``lam`` is a ridge term added to the kernel diagonal; with ``lam == 0``
    the spline interpolates every control point.
    """
    src, dst = corr.source, corr.target
    n = len(src)
    if n < 3:
        raise InsufficientPointsError(f"thin-plate spline needs at least 3 correspondences, got {n}")
    if n > MAX_CONTROLS:
        raise DegenerateConfigurationError(f"{n} control points exceed the dense-solve limit of {MAX_CONTROLS}")
    if lam < 0:
        raise ValueError(f"lambda must be non-negative, got {lam}")

    dist = _pairwise(src, src)
    if lam == 0.0:
        close = dist[np.triu_indices(n, k=1)]
        if close.size and close.min() < MIN_SEPARATION:
            raise DegenerateConfigurationError(
                "duplicate control points (separation below 1e-9 px); use lambda > 0"
            )
    # Solve in centered, unit-scale coordinates; the kernel rescales as
    # U(r/s) = U(r)/s**2 - log(s)/s**2 * r**2 and the r**2 part collapses to a
    # constant under the side conditions, so the fit maps back exactly.
    center = src.mean(axis=0)
    scale = float(np.sqrt(((src - center) ** 2).sum(axis=1).mean()))
    if not scale > 0:
        raise DegenerateConfigurationError("all control points coincide")
    q = (src - center) / scale
    K = tps_kernel(dist / scale)
    P = np.hstack([q, np.ones((n, 1))])
    L = np.zeros((n + 3, n + 3))
    L[:n, :n] = K + (lam / scale**2) * np.eye(n)
    L[:n, n:] = P
    L[n:, :n] = P.T
    rhs = np.zeros((n + 3, 2))
    rhs[:n] = dst

    anorm = np.abs(L).sum(axis=0).max()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(L, check_finite=False)
    rcond, info = lapack.dgecon(lu, anorm, norm="1")
    if info != 0 or not np.isfinite(rcond) or rcond < RCOND_LIMIT:
        cond = np.inf if rcond == 0 else 1.0 / rcond
        raise DegenerateConfigurationError(
            f"singular or ill-conditioned TPS system (condition estimate {cond:.3e}); "
            "controls may be collinear or duplicated"
        )
    sol = scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)
    w_unit, a_unit = sol[:n], sol[n:].T

    weights = w_unit / scale**2
    affine = np.empty((2, 3))
    affine[:, :2] = a_unit[:, :2] / scale
    const = (w_unit * (src**2).sum(axis=1, keepdims=True)).sum(axis=0)
    affine[:, 2] = a_unit[:, 2] - affine[:, :2] @ center - np.log(scale) / scale**2 * const
    return TpsTransform(
        affine=affine,
        weights=weights,
        controls=src.copy(),
        lam=float(lam),
        rcond=float(rcond),
    )


def eval_tps(tps: TpsTransform, points, chunk: int = 65536) -> np.ndarray:
    """Map query points through the spline; returns an ``(m, 2)`` array."""
    pts = as_points(points)
    out = np.empty_like(pts)
    A = tps.affine
    for start in range(0, len(pts), chunk):
        p = pts[start:start + chunk]
        res = p @ A[:, :2].T + A[:, 2]
        if len(tps.controls):
            res += tps_kernel(_pairwise(p, tps.controls)) @ tps.weights
        out[start:start + chunk] = res
    return out


def grid_points(width: int, height: int) -> np.ndarray:
    """Pixel-center coordinates in row-major order, as ``(x, y)`` rows."""
    ys, xs = np.mgrid[0:height, 0:width]
    return np.stack([xs.ravel(), ys.ravel()], axis=1).astype(np.float64)


def motion_field(tps: TpsTransform, width: int, height: int) -> np.ndarray:
    """Displacement ``F(g) - g`` on the full pixel grid, shape ``(H, W, 2)``."""
    if width < 1 or height < 1:
        raise ValueError(f"field dimensions must be positive, got {width}x{height}")
    g = grid_points(width, height)
    # chunk so the (chunk, n) kernel block stays around 32 MB
    chunk = max(1024, 4_000_000 // max(1, len(tps.controls)))
    return (eval_tps(tps, g, chunk=chunk) - g).reshape(height, width, 2)


def bending_energy(tps: TpsTransform) -> float:
    """``trace(W.T @ K @ W)`` over both output coordinates, clamped at 0."""
    K = tps_kernel(_pairwise(tps.controls, tps.controls))
    e = float(np.trace(tps.weights.T @ K @ tps.weights))
    return max(e, 0.0)
