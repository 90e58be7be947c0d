import numpy as np
import pytest

import widewarp as ww


def band_limited_image(w: int, h: int, seed: int = 0, cycles: int = 3,
                       channels: int = 1) -> ww.ImageBuffer:
    """Smooth test image built from a few low-frequency sinusoids, in [0.15, 0.85]."""
    rng = np.random.default_rng(seed)
    gx, gy = np.meshgrid(np.linspace(0, 1, w), np.linspace(0, 1, h))
    img = np.zeros((h, w))
    for _ in range(4):
        kx = int(rng.integers(0, cycles + 1))
        ky = int(rng.integers(0, cycles + 1))
        ph = rng.uniform(0, 2 * np.pi, 2)
        img += rng.uniform(0.3, 1.0) * np.sin(2 * np.pi * kx * gx + ph[0]) \
            * np.sin(2 * np.pi * ky * gy + ph[1])
    peak = max(float(np.abs(img).max()), 1e-9)
    data = 0.5 + 0.35 * img / peak
    return ww.ImageBuffer(np.repeat(data[:, :, None], channels, axis=2))


def smooth_flow(w: int, h: int, seed: int = 0, max_disp: float = 4.0) -> ww.FlowField:
    """Single-cycle random flow, zero at the borders, |F| <= max_disp pixels.

    One spatial cycle keeps |grad F| well below 1 at 64x64 with 4 px
    displacements (no folds), and the border window keeps composed sampling
    inside the raster so edge clamping never engages.
    """
    rng = np.random.default_rng(seed)
    gx, gy = np.meshgrid(np.linspace(0, 1, w), np.linspace(0, 1, h))
    window = np.sin(np.pi * gx) * np.sin(np.pi * gy)
    comps = []
    for _ in range(2):
        fld = np.zeros((h, w))
        for _ in range(3):
            ph = rng.uniform(0, 2 * np.pi, 2)
            fld += rng.uniform(-1, 1) * np.sin(2 * np.pi * gx + ph[0]) \
                * np.sin(2 * np.pi * gy + ph[1])
        comps.append(fld * window)
    f = np.stack(comps, axis=-1)
    peak = max(float(np.abs(f).max()), 1e-9)
    return ww.FlowField((f / peak * max_disp).astype(np.float32))


def checkerboard(w: int, h: int, cell: int = 32, soft: float = 2.0) -> ww.ImageBuffer:
    """Soft-edged checkerboard (tanh transitions to keep it near band-limited)."""
    gx, gy = np.meshgrid(np.arange(w, dtype=np.float64),
                         np.arange(h, dtype=np.float64))
    sx = np.tanh(np.sin(np.pi * gx / cell) * soft)
    sy = np.tanh(np.sin(np.pi * gy / cell) * soft)
    return ww.ImageBuffer((0.5 + 0.5 * sx * sy)[:, :, None])


def constant_flow(w: int, h: int, dx: float, dy: float) -> ww.FlowField:
    return ww.FlowField(np.stack([np.full((h, w), dx), np.full((h, w), dy)],
                                 axis=-1).astype(np.float32))


def conformality_ratio(flow: ww.FlowField, f: float, cx: float, cy: float,
                       pixel: np.ndarray, eps: float = 0.01) -> float:
    """Singular-value ratio of the sphere-to-output Jacobian at one pixel.

    Steps along orthonormal sphere tangents, projects the stepped view
    directions through the gnomonic map analytically, then tracks them
    through the flow under test; a conformal output raster gives ratio 1.
    """
    px, py = pixel[0] - cx, pixel[1] - cy
    r_out = float(np.hypot(px, py))
    theta = 2.0 * np.arctan(r_out / (2.0 * f))
    phi = float(np.arctan2(py, px))
    d = np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi),
                  np.cos(theta)])
    e_t = np.array([np.cos(theta) * np.cos(phi), np.cos(theta) * np.sin(phi),
                    -np.sin(theta)])
    e_p = np.array([-np.sin(phi), np.cos(phi), 0.0])
    rect = []
    for v in [d + eps * e_t, d - eps * e_t, d + eps * e_p, d - eps * e_p]:
        v = v / np.linalg.norm(v)
        rect.append([cx + f * v[0] / v[2], cy + f * v[1] / v[2]])
    out = ww.forward_map_points(flow, np.array(rect))
    jac = np.stack([(out[0] - out[1]) / (2 * eps),
                    (out[2] - out[3]) / (2 * eps)], axis=1)
    s = np.linalg.svd(jac, compute_uv=False)
    return float(s[0] / s[1])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
