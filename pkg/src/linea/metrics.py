"""Line-art quality metrics and deterministic loss functionals.

All metrics take line masks (True = ink).  Loss functionals take gray
frames and binarize or invert them as documented per function.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .raster import (
    DEFAULT_THRESHOLD,
    as_image,
    as_mask,
    binarize,
    diameter,
    distance_transform,
    effective_count,
)

CD_SCALE = 1e5
WCD_SCALE = 1e4
EMD_SCALE = 1e3
SOFTPLUS_ZERO = float(np.log(2.0))
_BELOW_ONE = float(np.nextafter(1.0, 0.0))


class DegenerateInputError(ValueError):
    """Raised when a metric is undefined for its input (e.g. an empty mask)."""


def _pair(b0, b1) -> tuple[np.ndarray, np.ndarray]:
    b0, b1 = as_mask(b0), as_mask(b1)
    if b0.shape != b1.shape:
        raise ValueError(f"mask shapes differ: {b0.shape} vs {b1.shape}")
    return b0, b1


def softplus(x):
    return np.logaddexp(0.0, x)


def sigmoid(x: float) -> float:
    return float(0.5 * (1.0 + np.tanh(0.5 * x)))


@dataclass(frozen=True)
class WcdConfig:
    # subtract softplus(0) so that identical masks score exactly 0
    zero_offset: bool = True


def chamfer_distance(b0, b1) -> float:
    """Symmetric chamfer distance normalised by ``2 * H * W * diameter``."""
    b0, b1 = _pair(b0, b1)
    h, w = b0.shape
    total = distance_transform(b1)[b0].sum() + distance_transform(b0)[b1].sum()
    return float(total / (2.0 * h * w * diameter(b0.shape)))


def count_weight(b0, b1) -> float:
    """Sigmoid of the relative effective-pixel count mismatch, in ``[0.5, 1)``."""
    n0, n1 = effective_count(b0), effective_count(b1)
    if n0 == 0 or n1 == 0:
        raise DegenerateInputError("count weight is undefined for an empty mask")
    # float64 sigmoid saturates to 1.0 past ~37; keep the interval half-open
    return min(sigmoid(abs(n0 - n1) / min(n0, n1)), _BELOW_ONE)


def weighted_chamfer_distance(b0, b1, cfg: WcdConfig | None = None) -> float:
    """Chamfer distance with a softplus distance penalty and a count-mismatch weight.

    The softplus is applied only at effective pixels; non-ink pixels
    contribute nothing.
    """
    cfg = cfg or WcdConfig()
    b0, b1 = _pair(b0, b1)
    weight = count_weight(b0, b1)
    h, w = b0.shape
    offset = SOFTPLUS_ZERO if cfg.zero_offset else 0.0
    d01 = distance_transform(b1)[b0]
    d10 = distance_transform(b0)[b1]
    total = (softplus(d01) - offset).sum() + (softplus(d10) - offset).sum()
    return float(weight * total / (h * w * diameter(b0.shape)))


def emd_1d(hist_a, hist_b) -> float:
    """1-D earth mover's distance between histograms on ``[0, 1]``.

    Both histograms are normalised to unit mass; bins are ``1 / len`` wide.
    """
    a = np.asarray(hist_a, dtype=np.float64)
    b = np.asarray(hist_b, dtype=np.float64)
    if a.ndim != 1 or a.shape != b.shape or a.size == 0:
        raise ValueError(f"histograms must be 1-D of equal non-zero length, got {a.shape} and {b.shape}")
    if (a < 0).any() or (b < 0).any():
        raise ValueError("histograms must be non-negative")
    sa, sb = a.sum(), b.sum()
    if sa <= 0 or sb <= 0:
        raise DegenerateInputError("EMD is undefined for a zero-mass histogram")
    cdf_gap = np.cumsum(a / sa) - np.cumsum(b / sb)
    return float(np.abs(cdf_gap).sum() / a.size)


def emd_axiswise(b0, b1) -> float:
    """Mean of the column-marginal and row-marginal 1-D EMDs."""
    b0, b1 = _pair(b0, b1)
    if not b0.any() or not b1.any():
        raise DegenerateInputError("axis-wise EMD is undefined for an empty mask")
    ex = emd_1d(b0.sum(axis=0), b1.sum(axis=0))
    ey = emd_1d(b0.sum(axis=1), b1.sum(axis=1))
    return 0.5 * (ex + ey)


def _frame_pairs(pred: Sequence, gt: Sequence):
    if len(pred) != len(gt) or len(pred) == 0:
        raise ValueError(f"need equal, non-zero frame counts; got {len(pred)} and {len(gt)}")
    pairs = []
    for i, (p, g) in enumerate(zip(pred, gt)):
        p, g = as_image(p), as_image(g)
        if p.shape != g.shape:
            raise ValueError(f"frame {i}: shapes differ {p.shape} vs {g.shape}")
        pairs.append((p, g))
    return pairs


def dt_loss(pred: Sequence, gt: Sequence, threshold: float = DEFAULT_THRESHOLD) -> float:
    """Mean absolute difference of the exact distance transforms, averaged over frames."""
    terms = [
        np.abs(distance_transform(binarize(p, threshold)) - distance_transform(binarize(g, threshold))).mean()
        for p, g in _frame_pairs(pred, gt)
    ]
    return float(np.mean(terms))


def count_loss(pred: Sequence, gt: Sequence, eta: float = 0.9) -> float:
    """Mismatch of soft ink mass ``sum(relu(ink - (1 - eta)))`` with ``ink = 1 - intensity``."""
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta must be in (0, 1), got {eta}")
    cut = 1.0 - eta

    def mass(img):
        return np.maximum((1.0 - img) - cut, 0.0).sum()

    return float(np.mean([abs(mass(p) - mass(g)) for p, g in _frame_pairs(pred, gt)]))


def binarization_loss(pred: Sequence) -> float:
    """Root-mean-square of ``|y - 0.5| - 0.5`` per frame, averaged over frames."""
    if len(pred) == 0:
        raise ValueError("need at least one frame")
    terms = []
    for p in pred:
        p = as_image(p)
        terms.append(np.sqrt(np.mean((np.abs(p - 0.5) - 0.5) ** 2)))
    return float(np.mean(terms))


@dataclass(frozen=True)
class MetricReport:
    cd: float
    wcd: float
    emd: float

    @property
    def cd_scaled(self) -> float:
        return self.cd * CD_SCALE

    @property
    def wcd_scaled(self) -> float:
        return self.wcd * WCD_SCALE

    @property
    def emd_scaled(self) -> float:
        return self.emd * EMD_SCALE

    def as_dict(self) -> dict[str, float]:
        out = asdict(self)
        out.update(cd_x1e5=self.cd_scaled, wcd_x1e4=self.wcd_scaled, emd_x1e3=self.emd_scaled)
        return out


def report(b_pred, b_gt, cfg: WcdConfig | None = None) -> MetricReport:
    return MetricReport(
        cd=chamfer_distance(b_pred, b_gt),
        wcd=weighted_chamfer_distance(b_pred, b_gt, cfg),
        emd=emd_axiswise(b_pred, b_gt),
    )
