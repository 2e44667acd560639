"""Flow-field color coding in the familiar color-wheel style.

Direction maps to hue (atan2 of the screen-space displacement), magnitude
maps to saturation relative to a reference maximum, and value stays at 1,
so zero flow renders white and opposite directions take opposite hues.
"""

from __future__ import annotations

import numpy as np

from .fields import as_flow


def _hsv_to_rgb(h: np.ndarray, s: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Vectorized HSV -> RGB for h in [0, 1), s and v in [0, 1]."""
    sector = np.floor(h * 6.0)
    f = h * 6.0 - sector
    sector = sector.astype(np.intp) % 6
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    channels = np.stack(
        [
            np.choose(sector, [v, q, p, p, t, v]),
            np.choose(sector, [t, v, v, q, p, p]),
            np.choose(sector, [p, p, t, v, v, q]),
        ],
        axis=-1,
    )
    return channels


def colorize_flow(flow: np.ndarray, max_magnitude: float | str = "auto") -> np.ndarray:
    """Render a flow field as an RGB image.

    `max_magnitude` is the magnitude that saturates the encoding; "auto"
    uses the field's own maximum. Larger magnitudes clamp at full
    saturation; a zero field comes out all white.
    """
    flow = as_flow(flow).astype(np.float64)
    dx = flow[:, :, 0]
    dy = flow[:, :, 1]
    magnitude = np.hypot(dx, dy)
    if max_magnitude == "auto":
        scale = float(magnitude.max())
    else:
        scale = float(max_magnitude)
        if not scale > 0.0:
            raise ValueError(f"max magnitude must be > 0, got {max_magnitude}")
    if scale <= 0.0:
        return np.ones(flow.shape[:2] + (3,), dtype=np.float32)
    hue = (np.arctan2(dy, dx) / (2.0 * np.pi)) % 1.0
    saturation = np.clip(magnitude / scale, 0.0, 1.0)
    rgb = _hsv_to_rgb(hue, saturation, np.ones_like(hue))
    return np.clip(rgb, 0.0, 1.0).astype(np.float32)
