"""On-disk formats: Middlebury .flo, ATNS attention stacks, PNG, GIF.

.flo layout (little-endian):
    float32 202021.25 | uint32 width | uint32 height | float32 (dx, dy) pairs, row-major

ATNS layout (little-endian):
    "ATNS" | uint32 version=1 | uint32 T | uint32 grid_h | uint32 grid_w
    then T records of: uint32 timestep_id | (grid_h*grid_w)^2 float32, row-major

Both codecs are strict: write followed by read is a bitwise identity, and
read rejects bad magic, truncated or trailing payload, and invalid content.
Masks on disk are 8-bit grayscale PNG with >= 128 meaning true. All image
PNG output is 8-bit.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from PIL import Image as PilImage

from .errors import FormatError
from .fields import as_image, as_mask
from .maskgen import AttentionStack

FLO_MAGIC = 202021.25
_FLO_MAGIC_BYTES = struct.pack("<f", FLO_MAGIC)
_MAX_PIXELS = 1 << 26  # dimension sanity cap for both codecs
_GIF_PALETTE_SAMPLE_FRAMES = 6


def _read_exact(f, count: int, what: str) -> bytes:
    data = f.read(count)
    if len(data) != count:
        raise FormatError(f"truncated file: expected {count} more bytes for {what}")
    return data


def _no_trailing(f, path) -> None:
    if f.read(1):
        raise FormatError(f"trailing data after payload in {path}")


def read_flo(path) -> np.ndarray:
    """Read a .flo flow field, validating layout and content on load."""
    path = Path(path)
    with open(path, "rb") as f:
        magic = _read_exact(f, 4, "magic")
        if magic != _FLO_MAGIC_BYTES:
            raise FormatError(f"bad magic in {path}: not a .flo file")
        w, h = struct.unpack("<II", _read_exact(f, 8, "dimensions"))
        if w == 0 or h == 0 or w * h > _MAX_PIXELS:
            raise FormatError(f"dimension overflow in {path}: {w}x{h}")
        payload = _read_exact(f, 8 * w * h, "flow payload")
        _no_trailing(f, path)
    flow = np.frombuffer(payload, dtype="<f4").reshape(h, w, 2).copy()
    if not np.isfinite(flow).all():
        raise FormatError(f"non-finite flow values in {path}")
    magnitude = np.hypot(flow[:, :, 0].astype(np.float64), flow[:, :, 1].astype(np.float64))
    bound = float(max(w, h))
    if magnitude.max(initial=0.0) > bound:
        raise FormatError(
            f"implausible flow in {path}: magnitude {magnitude.max():.1f} "
            f"exceeds max dimension {bound:.0f}"
        )
    return flow


def write_flo(flow: np.ndarray, path) -> None:
    flow = np.ascontiguousarray(np.asarray(flow, dtype=np.float32))
    if flow.ndim != 3 or flow.shape[2] != 2:
        raise ValueError(f"flow must be (H, W, 2), got {flow.shape}")
    h, w = flow.shape[:2]
    with open(path, "wb") as f:
        f.write(_FLO_MAGIC_BYTES)
        f.write(struct.pack("<II", w, h))
        f.write(flow.astype("<f4").tobytes())


def read_atns(path) -> AttentionStack:
    """Read an ATNS attention stack, validating header and content."""
    path = Path(path)
    with open(path, "rb") as f:
        if _read_exact(f, 4, "magic") != b"ATNS":
            raise FormatError(f"bad magic in {path}: not an ATNS file")
        version, count, grid_h, grid_w = struct.unpack("<IIII", _read_exact(f, 16, "header"))
        if version != 1:
            raise FormatError(f"unsupported ATNS version {version} in {path}")
        if count == 0:
            raise FormatError(f"empty stack in {path}")
        side = grid_h * grid_w
        if side == 0 or side * side > _MAX_PIXELS:
            raise FormatError(f"dimension overflow in {path}: grid {grid_h}x{grid_w}")
        timestep_ids = []
        maps = np.empty((count, side, side), dtype=np.float32)
        for i in range(count):
            (step,) = struct.unpack("<I", _read_exact(f, 4, f"timestep id {i}"))
            payload = _read_exact(f, 4 * side * side, f"map {i}")
            timestep_ids.append(step)
            maps[i] = np.frombuffer(payload, dtype="<f4").reshape(side, side)
        _no_trailing(f, path)
    if not np.isfinite(maps).all():
        raise FormatError(f"non-finite attention values in {path}")
    if maps.min() < 0.0:
        raise FormatError(f"negative attention values in {path}")
    return AttentionStack(timestep_ids=timestep_ids, maps=maps, grid_h=grid_h, grid_w=grid_w)


def write_atns(stack: AttentionStack, path) -> None:
    side = stack.grid_h * stack.grid_w
    with open(path, "wb") as f:
        f.write(b"ATNS")
        f.write(struct.pack("<IIII", 1, len(stack.timestep_ids), stack.grid_h, stack.grid_w))
        for step, amap in zip(stack.timestep_ids, stack.maps):
            f.write(struct.pack("<I", step))
            f.write(np.ascontiguousarray(amap, dtype="<f4").reshape(side * side).tobytes())


def image_to_u8(image: np.ndarray) -> np.ndarray:
    image = as_image(image)
    return np.rint(image * 255.0).astype(np.uint8)


def read_image(path) -> np.ndarray:
    """Load a PNG (or any PIL-readable image) as (H, W, C) float32 in [0, 1]."""
    with PilImage.open(path) as img:
        if img.mode not in ("L", "RGB", "RGBA"):
            img = img.convert("RGBA" if "A" in img.getbands() else "RGB")
        arr = np.asarray(img, dtype=np.float32) / 255.0
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return arr


def write_image(image: np.ndarray, path) -> None:
    u8 = image_to_u8(image)
    if u8.shape[2] == 1:
        pil = PilImage.fromarray(u8[:, :, 0], mode="L")
    else:
        pil = PilImage.fromarray(u8)
    pil.save(path, format="PNG")


def read_mask(path) -> np.ndarray:
    """Load an 8-bit grayscale PNG as a boolean mask (>= 128 is true)."""
    with PilImage.open(path) as img:
        arr = np.asarray(img.convert("L"))
    return arr >= 128


def write_mask(mask: np.ndarray, path) -> None:
    mask = as_mask(mask)
    PilImage.fromarray(np.where(mask, np.uint8(255), np.uint8(0)), mode="L").save(
        path, format="PNG"
    )


def write_gif(frames: list[np.ndarray], path, fps: int) -> None:
    """Encode uint8 RGB frames as a looping GIF with one shared palette.

    The 256-color palette is median-cut over a deterministic sample of the
    frames and applied file-wide without dithering, so static regions do
    not shimmer between frames.
    """
    if not frames:
        raise ValueError("no frames to encode")
    if fps < 1:
        raise ValueError(f"fps must be >= 1, got {fps}")
    picks = np.unique(
        np.linspace(0, len(frames) - 1, min(len(frames), _GIF_PALETTE_SAMPLE_FRAMES)).astype(int)
    )
    sample = np.concatenate([frames[i] for i in picks], axis=0)
    palette = PilImage.fromarray(sample).quantize(
        colors=256, method=PilImage.Quantize.MEDIANCUT, dither=PilImage.Dither.NONE
    )
    quantized = [
        PilImage.fromarray(f).quantize(palette=palette, dither=PilImage.Dither.NONE)
        for f in frames
    ]
    quantized[0].save(
        path,
        format="GIF",
        save_all=True,
        append_images=quantized[1:],
        duration=round(1000.0 / fps),
        loop=0,
        optimize=False,
    )
