"""Direction phrases, flow hint maps, and procedural flow synthesis.

The full circle of motion directions is divided into twelve 30-degree
quadrants, each tied to a canonical phrase. Phrase -> quadrant -> angle
-> unit hint map is the path from words to a dense direction field; a
constant-speed flow is the hint scaled by pixels per frame. Angles use
math convention (counterclockwise from the +x axis) while the screen's y
axis points down, hence the hint vector (cos t, -sin t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import as_flow, as_mask

QUADRANT_COUNT = 12
QUADRANT_DEG = 360.0 / QUADRANT_COUNT
_HALF_ARC_DEG = QUADRANT_DEG / 2.0

# Canonical phrases, one per quadrant, index i centered at i * 30 degrees.
CANONICAL_PHRASES = (
    "left to right",
    "up-right shallow",
    "up-right steep",
    "upwards",
    "up-left steep",
    "up-left shallow",
    "right to left",
    "down-left shallow",
    "down-left steep",
    "downwards",
    "down-right steep",
    "down-right shallow",
)

_PHRASE_TO_QUADRANT = {p: i for i, p in enumerate(CANONICAL_PHRASES)}

# Flow magnitude separating still regions from the slowest motion when
# recovering a mask from an averaged flow field.
DEFAULT_FLOW_THRESHOLD = 0.25


def quadrant_of_angle(theta: float) -> int:
    """Quadrant index whose 30-degree arc contains the angle (radians).

    Arcs are half-open [center - 15deg, center + 15deg), quadrant 0
    centered at 0, so together they tile the full circle.
    """
    deg = math.degrees(theta) % 360.0
    return int(((deg + _HALF_ARC_DEG) % 360.0) // QUADRANT_DEG) % QUADRANT_COUNT


def quadrant_center(index: int) -> float:
    """Center angle of a quadrant, in radians."""
    if not 0 <= index < QUADRANT_COUNT:
        raise ValueError(f"quadrant index {index} outside [0, {QUADRANT_COUNT})")
    return math.radians(index * QUADRANT_DEG)


def quadrant_for_phrase(phrase: str) -> int:
    """Map a direction phrase to its quadrant index.

    Accepts the twelve canonical phrases, or a comma-separated combination
    of them which resolves through the sum of their direction vectors.
    """
    norm = " ".join(phrase.strip().lower().split())
    if norm in _PHRASE_TO_QUADRANT:
        return _PHRASE_TO_QUADRANT[norm]
    parts = [p.strip() for p in norm.split(",") if p.strip()]
    if len(parts) > 1 and all(p in _PHRASE_TO_QUADRANT for p in parts):
        sx = sum(math.cos(quadrant_center(_PHRASE_TO_QUADRANT[p])) for p in parts)
        sy = sum(math.sin(quadrant_center(_PHRASE_TO_QUADRANT[p])) for p in parts)
        if abs(sx) < 1e-12 and abs(sy) < 1e-12:
            raise ValueError(f"direction phrases cancel out: {phrase!r}")
        return quadrant_of_angle(math.atan2(sy, sx))
    raise ValueError(
        f"unknown direction phrase {phrase!r}; canonical phrases are: "
        + ", ".join(repr(p) for p in CANONICAL_PHRASES)
    )


@dataclass(frozen=True)
class DirectionHint:
    """A resolved motion direction: quadrant, concrete angle, and phrase."""

    quadrant_index: int
    angle_theta: float  # radians, within the quadrant's 30-degree arc
    phrase: str


def hint_for_phrase(phrase: str, seed: int = 0, deterministic: bool = False) -> DirectionHint:
    """Resolve a phrase to a quadrant and draw an angle from its arc."""
    quadrant = quadrant_for_phrase(phrase)
    angle = sample_angle(quadrant, seed=seed, deterministic=deterministic)
    return DirectionHint(
        quadrant_index=quadrant, angle_theta=angle, phrase=CANONICAL_PHRASES[quadrant]
    )


def sample_angle(quadrant_index: int, seed: int = 0, deterministic: bool = False) -> float:
    """Angle (radians) from a quadrant's arc.

    Deterministic mode returns the arc center; otherwise the angle is drawn
    uniformly from [center - 15deg, center + 15deg) under the seed.
    """
    center = quadrant_center(quadrant_index)
    if deterministic:
        return center
    rng = np.random.Generator(np.random.PCG64(seed))
    half = math.radians(_HALF_ARC_DEG)
    return float(rng.uniform(center - half, center + half))


def hint_from_angle(theta: float, mask: np.ndarray) -> np.ndarray:
    """Unit direction field: (cos t, -sin t) inside the mask, zero outside."""
    mask = as_mask(mask)
    h, w = mask.shape
    hint = np.zeros((h, w, 2), dtype=np.float32)
    hint[mask, 0] = np.float32(math.cos(theta))
    hint[mask, 1] = np.float32(-math.sin(theta))
    return hint


def synth_flow(mask: np.ndarray, theta: float, speed: float) -> np.ndarray:
    """Constant flow of the given speed and direction inside the mask."""
    if speed < 0.0:
        raise ValueError(f"speed must be >= 0, got {speed}")
    return hint_from_angle(theta, mask) * np.float32(speed)


def flow_to_mask(avg_flow: np.ndarray, tau: float = DEFAULT_FLOW_THRESHOLD) -> np.ndarray:
    """Mask of pixels whose flow magnitude exceeds tau."""
    if tau < 0.0:
        raise ValueError(f"threshold must be >= 0, got {tau}")
    flow = as_flow(avg_flow).astype(np.float64)
    return np.hypot(flow[:, :, 0], flow[:, :, 1]) > tau
