"""Shared bilinear sampling.

All resampling in the toolkit goes through this one routine so that a single
alignment convention holds everywhere.  The lerp is written in two-point form
``a + t*(b - a)``: sampling at exact integer coordinates reproduces the stored
value bit-for-bit, and constant arrays stay constant to the last ulp.
"""

from __future__ import annotations

import numpy as np


def bilinear_sample(plane: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Sample a 2-D array at fractional (x, y) positions, edge-clamped.

    ``plane`` is indexed [row, col] = [y, x].  Coordinates outside the array
    are clamped to the border before interpolation.
    """
    h, w = plane.shape
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)

    # x0 may reach the last index (then x1 == x0 and tx == 0), which keeps
    # sampling at integer coordinates bit-exact even on the border.
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)

    tx = xs - x0
    ty = ys - y0

    v00 = plane[y0, x0]
    v01 = plane[y0, x1]
    v10 = plane[y1, x0]
    v11 = plane[y1, x1]

    top = v00 + tx * (v01 - v00)
    bot = v10 + tx * (v11 - v10)
    return top + ty * (bot - top)


def dest_to_source_coords(dst_size: int, src_size: int) -> np.ndarray:
    """Half-pixel-center source coordinates for resizing to ``dst_size``."""
    scale = src_size / dst_size
    return (np.arange(dst_size, dtype=np.float64) + 0.5) * scale - 0.5
