"""
Distance transforms of line masks
=================================

Every metric in linea is built on the exact Euclidean distance transform.
"""

import numpy as np

from linea.raster import binarize, distance_transform, distance_transform_bruteforce, mask_to_image
from linea.synth import render_polyline

# a small zig-zag stroke on a 48x48 canvas, drawn as black ink on white
mask = render_polyline([(4, 40), (20, 8), (30, 36), (44, 6)], (48, 48), stroke=1.5)
img = mask_to_image(mask)

# binarize() recovers the ink: anything darker than 0.95
assert np.array_equal(binarize(img), mask)
print("ink pixels:", mask.sum())

# distance from every pixel to the nearest ink pixel
dt = distance_transform(mask)
print("farthest pixel from the stroke: %.3f px" % dt.max())

# the exhaustive version agrees exactly on small inputs
print("max deviation from brute force:", np.abs(dt - distance_transform_bruteforce(mask)).max())

# an empty mask is treated as maximally far away: the image diagonal
print("empty mask ->", distance_transform(np.zeros((3, 4), bool))[0, 0])
