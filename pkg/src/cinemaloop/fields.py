"""Raster conventions and bilinear sampling shared by all numeric stages.

Rasters are row-major numpy arrays: images are (H, W, C) float32 with
channel values in [0, 1] and C in {1, 3, 4}; flow fields are (H, W, 2)
float32 holding per-pixel displacements (dx, dy) in pixels per frame;
masks are (H, W) bool. Coordinates follow the Middlebury convention:
x grows rightward, y grows downward, the origin is the top-left pixel
center, and a flow vector is added to pixel coordinates.

Nothing in this module mutates its inputs; results are freshly allocated.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

IMAGE_CHANNELS = (1, 3, 4)


@lru_cache(maxsize=8)
def pixel_grid(h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    """Read-only float64 pixel-center coordinate planes (xs, ys)."""
    ys, xs = np.meshgrid(
        np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij"
    )
    xs.flags.writeable = False
    ys.flags.writeable = False
    return xs, ys


def as_image(image) -> np.ndarray:
    """Validate and canonicalize an image to (H, W, C) float32 in [0, 1]."""
    arr = np.ascontiguousarray(np.asarray(image, dtype=np.float32))
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[2] not in IMAGE_CHANNELS:
        raise ValueError(
            f"image must be (H, W, C) with C in {IMAGE_CHANNELS}, got shape {arr.shape}"
        )
    if not np.isfinite(arr).all():
        raise ValueError("image contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("image values must lie in [0, 1]")
    return arr


def as_flow(flow) -> np.ndarray:
    """Validate and canonicalize a flow field to (H, W, 2) float32."""
    arr = np.ascontiguousarray(np.asarray(flow, dtype=np.float32))
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValueError(f"flow must be (H, W, 2), got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("flow contains non-finite values")
    return arr


def as_mask(mask) -> np.ndarray:
    """Validate and canonicalize a mask to (H, W) bool."""
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise ValueError(f"mask must be (H, W), got shape {arr.shape}")
    return np.ascontiguousarray(arr.astype(bool))


def require_same_hw(a: np.ndarray, b: np.ndarray, what: str = "inputs") -> None:
    if a.shape[:2] != b.shape[:2]:
        raise ValueError(f"{what} disagree on size: {a.shape[:2]} vs {b.shape[:2]}")


def sample_bilinear(field: np.ndarray, x, y) -> np.ndarray:
    """Sample a (H, W, K) field at continuous coordinates with border clamping.

    Coordinates are clamped to [0, W-1] x [0, H-1] before interpolation, so
    the lookup is total. At integer lattice points the stored value is
    reproduced exactly. `x` and `y` may be scalars or arrays of any common
    shape; the result has that shape plus the channel axis.
    """
    f = np.asarray(field)
    if f.ndim != 3:
        raise ValueError(f"field must be (H, W, K), got shape {f.shape}")
    h, w = f.shape[:2]
    x = np.clip(np.asarray(x, dtype=np.float64), 0.0, float(w - 1))
    y = np.clip(np.asarray(y, dtype=np.float64), 0.0, float(h - 1))
    x0 = np.floor(x).astype(np.intp)
    y0 = np.floor(y).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (x - x0)[..., None]
    fy = (y - y0)[..., None]
    omx = 1.0 - fx
    top = f[y0, x0] * omx + f[y0, x1] * fx
    bottom = f[y1, x0] * omx + f[y1, x1] * fx
    return top * (1.0 - fy) + bottom * fy


def mask_flow(flow: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Zero a flow field outside a mask; inside it is passed through."""
    flow = as_flow(flow)
    mask = as_mask(mask)
    require_same_hw(flow, mask, "flow and mask")
    return np.where(mask[:, :, None], flow, np.float32(0.0))


def reverse_flow(flow: np.ndarray) -> np.ndarray:
    """Negate every displacement vector."""
    return np.negative(as_flow(flow))
