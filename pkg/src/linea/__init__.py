"""Thin-plate-spline inbetweening for raster line art, with line-art metrics."""

__version__ = "0.1.0"

from .raster import (
    binarize,
    distance_transform,
    distance_transform_bruteforce,
    effective_count,
    load_image,
    mask_to_image,
    save_image,
)
from .tps import CorrespondenceSet, TpsTransform, bending_energy, eval_tps, fit_tps, motion_field
from .motion import WarpConfig, backward_warp, blend, inbetween_variants, intermediate_flows, interpolate_sequence
from .metrics import (
    MetricReport,
    WcdConfig,
    binarization_loss,
    chamfer_distance,
    count_loss,
    count_weight,
    dt_loss,
    emd_1d,
    emd_axiswise,
    report,
    weighted_chamfer_distance,
)
from .matchkit import MatchConfig, fallback_match, read_correspondences, write_correspondences
from .synth import erase_random, render_circle, render_polyline, shift_mask, translating_scene
