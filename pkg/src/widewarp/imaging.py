"""Raster container, resampling and the Sobel edge operator.

Images are dense float rasters with samples in [0, 1].  PNG (8-bit) is the
only interchange format; values map linearly to [0, 1].
"""

from __future__ import annotations

import os
import typing
from dataclasses import dataclass

import numpy as np
from PIL import Image

from ._interp import bilinear_sample, dest_to_source_coords

# Rec.601 luminance weights; used wherever an RGB raster feeds a
# single-channel operator.
_LUMA = np.array([0.299, 0.587, 0.114])



@dataclass(frozen=True)
class ImageBuffer:
    """H x W x C raster, row-major, channel-interleaved, samples in [0, 1]."""

    data: np.ndarray  # shape (height, width, channels), float64

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ValueError(f"expected (h, w, 1|3) raster, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image samples must be finite")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("image samples must lie in [0, 1]")
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def samples(self) -> np.ndarray:
        """Flat row-major, channel-interleaved sample vector."""
        return self.data.reshape(-1)

    def plane(self, c: int = 0) -> np.ndarray:
        """One channel as a 2-D array (a view, do not mutate)."""
        return self.data[:, :, c]

    def luminance(self) -> np.ndarray:
        """Rec.601 luma as a 2-D float array."""
        if self.channels == 1:
            return self.data[:, :, 0]
        return self.data @ _LUMA


def _sobel_gradients(plane: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """3x3 Sobel (gx, gy) with edge-replicated borders, evaluated separably.

    Kernels are normalized by 1/4 per axis so a unit step yields magnitude 1.
    The difference-then-smooth form makes the gradient of any constant image
    exactly zero.
    """
    padded = np.pad(plane, 1, mode="edge")
    diff_x = padded[:, 2:] - padded[:, :-2]
    gx = (diff_x[:-2] + 2.0 * diff_x[1:-1] + diff_x[2:]) * 0.25
    diff_y = padded[2:, :] - padded[:-2, :]
    gy = (diff_y[:, :-2] + 2.0 * diff_y[:, 1:-1] + diff_y[:, 2:]) * 0.25
    return gx, gy


def sobel_magnitude(plane: np.ndarray) -> np.ndarray:
    """Unclamped Sobel gradient magnitude of an arbitrary 2-D array."""
    gx, gy = _sobel_gradients(np.asarray(plane, dtype=np.float64))
    return np.sqrt(gx * gx + gy * gy)


def sobel_edges(img: ImageBuffer) -> ImageBuffer:
    """Edge-magnitude map: min(1, |grad|) of the luma, single channel."""
    mag = sobel_magnitude(img.luminance())
    return ImageBuffer(np.minimum(mag, 1.0))


def resize_bilinear(img: ImageBuffer, new_w: int, new_h: int) -> ImageBuffer:
    """Bilinear resize with half-pixel-center alignment."""
    if new_w < 1 or new_h < 1:
        raise ValueError("target size must be at least 1x1")
    if new_w == img.width and new_h == img.height:
        return ImageBuffer(img.data.copy())
    xs = dest_to_source_coords(new_w, img.width)
    ys = dest_to_source_coords(new_h, img.height)
    gx, gy = np.meshgrid(xs, ys)
    out = np.empty((new_h, new_w, img.channels))
    for c in range(img.channels):
        out[:, :, c] = bilinear_sample(img.plane(c), gx, gy)
    return ImageBuffer(np.clip(out, 0.0, 1.0))


def read_png(path: "str | os.PathLike | typing.BinaryIO") -> ImageBuffer:
    """Load an 8-bit PNG (path or binary stream); values map linearly to [0, 1]."""
    with Image.open(path) as im:
        if im.mode in ("L", "I;16", "I"):
            im = im.convert("L")
            arr = np.asarray(im, dtype=np.float64)[:, :, None]
        else:
            im = im.convert("RGB")
            arr = np.asarray(im, dtype=np.float64)
    return ImageBuffer(arr / 255.0)


def write_png(img: ImageBuffer, path: str | os.PathLike) -> None:
    """Write an 8-bit PNG (round-to-nearest quantization)."""
    q = np.rint(np.clip(img.data, 0.0, 1.0) * 255.0).astype(np.uint8)
    if img.channels == 1:
        pil = Image.fromarray(q[:, :, 0], mode="L")
    else:
        pil = Image.fromarray(q, mode="RGB")
    pil.save(path, format="PNG")
