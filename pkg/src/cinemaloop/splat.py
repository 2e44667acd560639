"""Forward splatting and symmetric frame composition in pixel space.

Each frame of the loop is rendered by scattering the input image along the
forward cumulative flow and, independently, along the backward cumulative
flow, then normalizing the two weighted accumulations into one picture.
Splatting uses a bilinear kernel, the adjoint of the bilinear gather used
for flow lookups: a source pixel distributes its color to the four integer
positions around its displaced location. Blend weights fade the forward
pass out and the backward pass in linearly over the loop, so frame 0 and
frame N reproduce the input and the sequence closes seamlessly.

Pixels that receive (almost) no splat weight are holes; they are filled by
iterative diffusion from their known neighborhood.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .euler import CumulativeFlowPair
from .fields import as_flow, as_image, pixel_grid, require_same_hw

# Accumulated weight at or below this is treated as a hole rather than
# legitimate coverage; it separates true gaps from tiny bilinear residue.
HOLE_EPS = 1e-6

_CORNERS = ((0, 0), (1, 0), (0, 1), (1, 1))


@dataclass(eq=False)
class SplatAccumulator:
    """Weighted color and weight sums produced by forward splatting."""

    color_sum: np.ndarray  # (H, W, C) float64
    weight_sum: np.ndarray  # (H, W) float64


@dataclass(frozen=True)
class BlendSchedule:
    """Complementary blend weights over a loop of `total` frames."""

    total: int

    def weight_backward(self, n: int) -> float:
        return n / self.total

    def weight_forward(self, n: int) -> float:
        # Derived as the complement so the pair sums to 1.0 exactly.
        return 1.0 - self.weight_backward(n)


def forward_splat(image: np.ndarray, flow: np.ndarray, scalar_weight: float) -> SplatAccumulator:
    """Scatter every source pixel along its displacement.

    Each source contributes scalar_weight times the bilinear kernel to the
    up-to-four integer targets around (x + dx, y + dy); corner contributions
    falling outside the canvas are dropped.
    """
    image = as_image(image)
    flow = as_flow(flow)
    require_same_hw(image, flow, "image and flow")
    if not scalar_weight > 0.0:
        raise ValueError(f"scalar weight must be > 0, got {scalar_weight}")

    h, w, c = image.shape
    xs, ys = pixel_grid(h, w)
    tx = (xs + flow[:, :, 0]).ravel()
    ty = (ys + flow[:, :, 1]).ravel()
    x0 = np.floor(tx).astype(np.intp)
    y0 = np.floor(ty).astype(np.intp)
    fx = tx - x0
    fy = ty - y0

    colors = image.reshape(-1, c).astype(np.float64)
    color_sum = np.zeros((h * w, c), dtype=np.float64)
    weight_sum = np.zeros(h * w, dtype=np.float64)

    for ox, oy in _CORNERS:
        cx = x0 + ox
        cy = y0 + oy
        wgt = (fx if ox else 1.0 - fx) * (fy if oy else 1.0 - fy) * scalar_weight
        # Out-of-canvas contributions keep their (clamped) index but a zero
        # weight, which leaves every sum untouched and avoids compaction.
        valid = (cx >= 0) & (cx < w) & (cy >= 0) & (cy < h)
        np.multiply(wgt, valid, out=wgt)
        idx = np.clip(cy, 0, h - 1) * w + np.clip(cx, 0, w - 1)
        weight_sum += np.bincount(idx, weights=wgt, minlength=h * w)
        for ch in range(c):
            color_sum[:, ch] += np.bincount(idx, weights=wgt * colors[:, ch], minlength=h * w)

    return SplatAccumulator(color_sum.reshape(h, w, c), weight_sum.reshape(h, w))


def composite_symmetric(
    acc_fwd: SplatAccumulator, acc_bwd: SplatAccumulator
) -> tuple[np.ndarray, np.ndarray]:
    """Merge both splat directions into one frame plus its coverage map.

    Covered pixels are the weight-normalized color sums; pixels whose
    combined weight is at most HOLE_EPS are left at zero and flagged by the
    coverage map for fill_holes.
    """
    require_same_hw(acc_fwd.weight_sum, acc_bwd.weight_sum, "accumulators")
    color = acc_fwd.color_sum + acc_bwd.color_sum
    coverage = acc_fwd.weight_sum + acc_bwd.weight_sum
    covered = coverage > HOLE_EPS
    out = np.zeros_like(color)
    out[covered] = color[covered] / coverage[covered, None]
    return np.clip(out, 0.0, 1.0).astype(np.float32), coverage


def fill_holes(image: np.ndarray, coverage: np.ndarray) -> np.ndarray:
    """Replace uncovered pixels by diffusion from covered neighbors.

    Rounds are synchronous: every hole with at least one known 3x3 neighbor
    takes the mean of those neighbors, then the whole layer is marked known.
    Covered pixels are never altered. A remaining hole region that touches
    no known pixel is filled with the global mean of the known pixels.
    """
    image = as_image(image)
    coverage = np.asarray(coverage)
    require_same_hw(image, coverage, "image and coverage")
    h, w, c = image.shape
    known = (coverage > HOLE_EPS).ravel().copy()
    if known.all():
        return image.copy()

    values = image.astype(np.float64).reshape(-1, c)
    remaining = np.flatnonzero(~known)
    while remaining.size:
        y = remaining // w
        x = remaining % w
        count = np.zeros(remaining.size, dtype=np.float64)
        total = np.zeros((remaining.size, c), dtype=np.float64)
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dy == 0 and dx == 0:
                    continue
                ny = y + dy
                nx = x + dx
                inside = (ny >= 0) & (ny < h) & (nx >= 0) & (nx < w)
                rows = np.flatnonzero(inside)
                nidx = ny[rows] * w + nx[rows]
                is_known = known[nidx]
                rows = rows[is_known]
                nidx = nidx[is_known]
                count[rows] += 1.0
                total[rows] += values[nidx]
        fillable = count > 0.0
        if not fillable.any():
            fill = values[known].mean(axis=0) if known.any() else np.zeros(c)
            values[remaining] = fill
            break
        targets = remaining[fillable]
        values[targets] = total[fillable] / count[fillable, None]
        known[targets] = True
        remaining = remaining[~fillable]

    return values.reshape(h, w, c).astype(np.float32)


def symmetric_splat_frame(image: np.ndarray, pair: CumulativeFlowPair) -> np.ndarray:
    """Render loop frame `pair.n` from the input image and its flow pair.

    Frames 0 and N return the input bit-exact; every other frame splats the
    image along both cumulative flows, blends with the linear schedule, and
    fills residual holes.
    """
    image = as_image(image)
    if not 0 <= pair.n <= pair.total:
        raise ValueError(f"frame index {pair.n} outside [0, {pair.total}]")
    if pair.n == 0 or pair.n == pair.total:
        return image.copy()
    schedule = BlendSchedule(pair.total)
    acc_fwd = forward_splat(image, pair.forward, schedule.weight_forward(pair.n))
    acc_bwd = forward_splat(image, pair.backward, schedule.weight_backward(pair.n))
    frame, coverage = composite_symmetric(acc_fwd, acc_bwd)
    return fill_holes(frame, coverage)
