"""
Fallback keypoint matching
==========================

When no external matcher is at hand, linea can find a few reliable
correspondences itself.  It works on the distance surface of the line art
rather than on raw pixels.
"""

import tempfile
from pathlib import Path

import numpy as np

from linea.matchkit import fallback_match, read_correspondences, write_correspondences
from linea.raster import mask_to_image
from linea.synth import render_polyline, shift_mask

pts = [(20, 30), (60, 25), (90, 70), (50, 100), (30, 80)]
shape = render_polyline(pts, (128, 128), 2, closed=True) | render_polyline([(60, 25), (50, 100)], (128, 128), 2)

y0 = mask_to_image(shape)
y1 = mask_to_image(shift_mask(shape, (7, 0)))

corr = fallback_match(y0, y1)
print(len(corr), "matches; median displacement", np.median(corr.target - corr.source, axis=0))

# correspondences round-trip through a small JSON file
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "corr.json"
    write_correspondences(corr, path)
    print(path.read_text().splitlines()[:6])
    print("reloaded", len(read_correspondences(path)), "pairs")
