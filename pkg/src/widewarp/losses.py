"""Evaluation loss functionals for flow producers.

All reductions are means, so values are resolution-independent.  Every loss is
symmetric in its two arguments and nonnegative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .flow import FlowField
from .imaging import ImageBuffer, sobel_magnitude


@dataclass(frozen=True)
class LossWeights:
    lambda1: float = 5.0  # edge-attention term
    lambda2: float = 5.0  # face-attention term
    lambda3: float = 1.0  # line-stage term
    lambda4: float = 1.0  # shape-stage term

    def __post_init__(self):
        vals = (self.lambda1, self.lambda2, self.lambda3, self.lambda4)
        if any(not np.isfinite(v) or v < 0 for v in vals):
            raise ValueError("loss weights must be finite and nonnegative")


def _as_array(x) -> np.ndarray:
    if isinstance(x, ImageBuffer):
        return x.data
    if isinstance(x, FlowField):
        return x.data.astype(np.float64)
    return np.asarray(x, dtype=np.float64)


def l2(a, b) -> float:
    """Mean squared difference over all samples of two same-shaped values."""
    aa, bb = _as_array(a), _as_array(b)
    if aa.shape != bb.shape:
        raise DimensionMismatch(f"shape {aa.shape} vs {bb.shape}")
    d = aa - bb
    return float(np.mean(d * d))


def _edge_planes(x) -> np.ndarray:
    """Per-channel Sobel magnitude; image planes additionally clamp to 1."""
    arr = _as_array(x)
    planes = [sobel_magnitude(arr[:, :, c]) for c in range(arr.shape[2])]
    mag = np.stack(planes, axis=-1)
    if isinstance(x, ImageBuffer):
        mag = np.minimum(mag, 1.0)
    return mag


def sobel_l2(a, b) -> float:
    """Mean squared difference of the Sobel edge responses of a and b."""
    aa, bb = _as_array(a), _as_array(b)
    if aa.shape != bb.shape:
        raise DimensionMismatch(f"shape {aa.shape} vs {bb.shape}")
    d = _edge_planes(a) - _edge_planes(b)
    return float(np.mean(d * d))


def line_loss(f_flow: FlowField, i_flow: FlowField,
              f_proj: ImageBuffer, i_proj: ImageBuffer) -> float:
    """Stage-1 reconstruction loss: l2 + sobel_l2 on flows and projected images."""
    return (l2(f_flow, i_flow) + sobel_l2(f_flow, i_flow)
            + l2(f_proj, i_proj) + sobel_l2(f_proj, i_proj))


def shape_loss(f_flow: FlowField, i_flow: FlowField,
               f_out: ImageBuffer, i_out: ImageBuffer) -> float:
    """Stage-2 reconstruction loss: same structure on correction flow and output."""
    return (l2(f_flow, i_flow) + sobel_l2(f_flow, i_flow)
            + l2(f_out, i_out) + sobel_l2(f_out, i_out))


def lam_loss(f_lam: ImageBuffer, i_edge: ImageBuffer) -> float:
    """Edge-attention supervision loss (plain l2)."""
    return l2(f_lam, i_edge)


def fam_loss(f_fam: ImageBuffer, i_face: ImageBuffer) -> float:
    """Face-attention supervision loss (plain l2)."""
    return l2(f_fam, i_face)


def total_loss(parts: tuple[float, float, float, float],
               w: LossWeights = LossWeights()) -> float:
    """Weighted sum of (lam, fam, line, shape) component losses."""
    lam, fam, line, shape = parts
    return float(w.lambda1 * lam + w.lambda2 * fam
                 + w.lambda3 * line + w.lambda4 * shape)
