"""End-to-end loop assembly: mask the flow, integrate, render, emit.

The input image is both the first and the last frame of the loop; in
between, frames are rendered by symmetric splatting over the cumulative
flow pairs. Frame rendering is independent per index, so it can fan out
over a thread pool; output is deterministic regardless of thread count
because each frame's computation is self-contained and the frame-to-file
mapping is fixed.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NumericsError
from .euler import integrate_sequence
from .fields import as_flow, as_image, as_mask, mask_flow, require_same_hw
from .fileio import image_to_u8, write_gif, write_image
from .splat import symmetric_splat_frame

DEFAULT_FPS = 30
# Loop lengths per preset; artistic scenes get the longer cycle.
PRESET_FRAMES = {"real": 60, "artistic": 120}
OUTPUT_FORMATS = ("png-sequence", "gif")


@dataclass(frozen=True)
class LoopConfig:
    """Frame count, playback rate, and output format of one loop."""

    frames: int = PRESET_FRAMES["real"]
    fps: int = DEFAULT_FPS
    fmt: str = "png-sequence"

    def __post_init__(self):
        if self.frames < 1:
            raise ValueError(f"frame count must be >= 1, got {self.frames}")
        if self.fps < 1:
            raise ValueError(f"fps must be >= 1, got {self.fps}")
        if self.fmt not in OUTPUT_FORMATS:
            raise ValueError(f"format must be one of {OUTPUT_FORMATS}, got {self.fmt!r}")


def resolve_threads(threads: int | str | None) -> int:
    if threads is None or threads == "auto":
        return os.cpu_count() or 1
    threads = int(threads)
    if threads < 1:
        raise ValueError(f"thread count must be >= 1, got {threads}")
    return threads


def _prepare(image, flow, mask, config: LoopConfig):
    image = as_image(image)
    flow = as_flow(flow)
    mask = as_mask(mask)
    require_same_hw(image, flow, "image and flow")
    require_same_hw(image, mask, "image and mask")
    pairs = integrate_sequence(mask_flow(flow, mask), config.frames)
    return image, pairs


def _render(image: np.ndarray, pair) -> np.ndarray:
    frame = symmetric_splat_frame(image, pair)
    if not np.isfinite(frame).all():
        raise NumericsError(f"frame {pair.n} contains non-finite values")
    return frame


def generate_loop(image, flow, mask, config: LoopConfig) -> list[np.ndarray]:
    """Render all frames 0..N of the loop in memory.

    The flow is zeroed outside the mask before integration, so regions the
    mask excludes cannot move. Frames 0 and N are the input image bit-exact.
    """
    image, pairs = _prepare(image, flow, mask, config)
    return [_render(image, pair) for pair in pairs]


def frame_name(n: int, total: int) -> str:
    return f"frame_{n:0{len(str(total))}d}.png"


def animate(image, flow, mask, config: LoopConfig, out_path, threads=None) -> list[Path]:
    """Render the loop and emit it as a PNG sequence or a looping GIF.

    PNG-sequence mode writes zero-padded frames into `out_path` (created if
    needed) and returns their paths; GIF mode writes one file. Rendering
    fans out over `threads` workers (an int, or "auto"/None for the CPU
    count) without affecting the emitted bytes.
    """
    image, pairs = _prepare(image, flow, mask, config)
    out_path = Path(out_path)
    if config.fmt == "png-sequence" and out_path.suffix.lower() == ".gif":
        raise ValueError(
            f"{out_path} looks like a GIF but the config requests a PNG sequence; "
            'use LoopConfig(fmt="gif") or a directory path'
        )
    workers = resolve_threads(threads)

    if config.fmt == "gif":
        frames: list[np.ndarray | None] = [None] * len(pairs)

        def render_u8(n: int) -> None:
            frame = _render(image, pairs[n])
            if frame.shape[2] == 1:
                frame = np.repeat(frame, 3, axis=2)
            frames[n] = image_to_u8(frame[:, :, :3])

        _run(render_u8, len(pairs), workers)
        write_gif(frames, out_path, config.fps)
        return [out_path]

    out_path.mkdir(parents=True, exist_ok=True)
    paths = [out_path / frame_name(n, config.frames) for n in range(len(pairs))]

    def render_png(n: int) -> None:
        write_image(_render(image, pairs[n]), paths[n])

    _run(render_png, len(pairs), workers)
    return paths


def _run(task, count: int, workers: int) -> None:
    if workers <= 1:
        for n in range(count):
            task(n)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # list() propagates the first worker exception.
        list(pool.map(task, range(count)))
