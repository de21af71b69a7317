"""Raster frames and masks: I/O, binarization, pixel counting, distance transforms.

Conventions used across the package:

* a gray image is a float64 ``(H, W)`` array in ``[0, 1]``, 1 = white paper;
* a line mask is a bool ``(H, W)`` array, True = effective (ink) pixel;
* a distance map is a float64 ``(H, W)`` array in pixel units.
"""
from __future__ import annotations

import os
from pathlib import Path

import numpy as np
from PIL import Image

DEFAULT_THRESHOLD = 0.95
BRUTEFORCE_MAX_PIXELS = 10_000


def diameter(shape: tuple[int, int]) -> float:
    h, w = shape
    return float(np.sqrt(h * h + w * w))


def as_image(img) -> np.ndarray:
    """Validate and return ``img`` as a float64 gray image."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"gray image must be 2-D, got shape {arr.shape}")
    if arr.size and (np.nanmin(arr) < 0.0 or np.nanmax(arr) > 1.0 or np.isnan(arr).any()):
        raise ValueError("gray image intensities must lie in [0, 1]")
    return arr


def as_mask(mask) -> np.ndarray:
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise ValueError(f"line mask must be 2-D, got shape {arr.shape}")
    return arr.astype(bool, copy=False)


def mask_to_image(mask) -> np.ndarray:
    """Render a mask as black ink on white paper."""
    return np.where(as_mask(mask), 0.0, 1.0)


def load_image(path: str | os.PathLike) -> np.ndarray:
    """Read an 8-bit grayscale or RGB PNG/PGM; RGB is reduced by luminance."""
    path = Path(path)
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("RGB", "RGBA", "P", "LA"):
                im = im.convert("RGB").convert("L")
            elif mode == "1":
                im = im.convert("L")
            elif mode != "L":
                raise OSError(f"{path}: unsupported image mode {mode!r} (need 8-bit gray or RGB)")
            data = np.asarray(im, dtype=np.uint8)
    except FileNotFoundError:
        raise
    except OSError as exc:
        raise OSError(f"cannot read image {path}: {exc}") from exc
    return data.astype(np.float64) / 255.0


def save_image(img, path: str | os.PathLike) -> None:
    """Write an 8-bit gray image; format follows the suffix (.png or .pgm)."""
    arr = as_image(img)
    data = np.rint(arr * 255.0).astype(np.uint8)
    path = Path(path)
    fmt = "PPM" if path.suffix.lower() == ".pgm" else "PNG"
    Image.fromarray(data).save(path, format=fmt)


def binarize(img, threshold: float = DEFAULT_THRESHOLD) -> np.ndarray:
    """Effective pixels are those strictly darker than ``threshold``."""
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    return as_image(img) < threshold


def effective_count(mask) -> int:
    return int(np.count_nonzero(as_mask(mask)))


def _lower_envelope_rows(f: np.ndarray) -> np.ndarray:
    """Squared-distance lower envelope along the last axis, all rows at once.

    Computes ``out[r, x] = min_q (x - q)**2 + f[r, q]`` with the
    Felzenszwalb-Huttenlocher parabola sweep.  ``f`` may hold ``inf``
    for sites that do not exist; rows with no finite site stay ``inf``.
    """
    rows, n = f.shape
    out = np.full((rows, n), np.inf)
    if n == 0 or rows == 0:
        return out
    idx = np.arange(rows)
    v = np.zeros((rows, n), dtype=np.int64)
    z = np.full((rows, n + 1), np.inf)
    k = np.full(rows, -1, dtype=np.int64)
    for q in range(n):
        fq = f[:, q]
        live = np.isfinite(fq)
        if not live.any():
            continue
        s = np.full(rows, -np.inf)
        pending = live & (k >= 0)
        while pending.any():
            r = idx[pending]
            vk = v[r, k[r]]
            sr = ((fq[r] + q * q) - (f[r, vk] + vk * vk)) / (2.0 * (q - vk))
            pop = sr <= z[r, k[r]]
            s[r] = sr
            k[r[pop]] -= 1
            pending = np.zeros(rows, dtype=bool)
            pending[r[pop]] = True
            pending &= k >= 0
        r = idx[live]
        k[r] += 1
        v[r, k[r]] = q
        z[r, k[r]] = np.where(k[r] == 0, -np.inf, s[r])
        z[r, k[r] + 1] = np.inf
    has = k >= 0
    ptr = np.zeros(rows, dtype=np.int64)
    r = idx[has]
    for x in range(n):
        while True:
            adv = z[r, ptr[r] + 1] < x
            if not adv.any():
                break
            ptr[r[adv]] += 1
        vk = v[r, ptr[r]]
        out[r, x] = (x - vk) ** 2 + f[r, vk]
    return out


def squared_distance_transform(mask) -> np.ndarray:
    """Exact squared Euclidean distance to the nearest effective pixel (inf if none)."""
    mask = as_mask(mask)
    f = np.where(mask, 0.0, np.inf)
    cols = _lower_envelope_rows(f.T).T
    return _lower_envelope_rows(cols)


def distance_transform(mask) -> np.ndarray:
    """Exact Euclidean distance transform of a line mask.

    An empty mask maps to the image diameter everywhere.
    """
    mask = as_mask(mask)
    if not mask.any():
        return np.full(mask.shape, diameter(mask.shape))
    return np.sqrt(squared_distance_transform(mask))


def distance_transform_bruteforce(mask) -> np.ndarray:
    """Exhaustive nearest-pixel search; test oracle for small masks."""
    mask = as_mask(mask)
    h, w = mask.shape
    if h * w > BRUTEFORCE_MAX_PIXELS:
        raise ValueError(f"brute-force transform limited to {BRUTEFORCE_MAX_PIXELS} pixels, got {h * w}")
    ys, xs = np.nonzero(mask)
    if ys.size == 0:
        return np.full(mask.shape, diameter(mask.shape))
    gy, gx = np.mgrid[0:h, 0:w]
    d2 = (gy.reshape(-1, 1) - ys) ** 2 + (gx.reshape(-1, 1) - xs) ** 2
    return np.sqrt(d2.min(axis=1).astype(np.float64)).reshape(h, w)
