"""Command-line interface.

Subcommands: animate, integrate, mask, synth-flow, flow-mask, colorize,
pca-viz. Exit codes: 0 success, 2 usage error, 3 I/O or format error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import sys

from . import fileio, flowsynth, maskgen, visualize
from .errors import FormatError, NumericsError
from .euler import euler_backward, euler_forward
from .fields import require_same_hw
from .loop import DEFAULT_FPS, PRESET_FRAMES, LoopConfig, animate

_GLOBALS = (
    ("--seed", dict(type=int, default=0, help="seed for all randomness (default 0)")),
    ("--fps", dict(type=int, default=DEFAULT_FPS, help="playback rate (default 30)")),
    ("--threads", dict(default="auto", help="worker threads, an integer or 'auto'")),
)


def _add_globals(parser: argparse.ArgumentParser, suppress: bool) -> None:
    for flag, kwargs in _GLOBALS:
        if suppress:
            kwargs = dict(kwargs, default=argparse.SUPPRESS)
        parser.add_argument(flag, **kwargs)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cinemaloop",
        description="Turn a still image, a constant flow field, and a motion mask "
        "into a seamlessly looping cinemagraph.",
    )
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("animate", help="render a looping cinemagraph")
    p.add_argument("--image", required=True, help="input image (PNG)")
    p.add_argument("--flow", required=True, help="per-frame flow (.flo)")
    p.add_argument("--mask", required=True, help="motion mask (grayscale PNG)")
    p.add_argument("--frames", type=int, default=None, help="loop length N (overrides preset)")
    p.add_argument(
        "--preset",
        choices=sorted(PRESET_FRAMES),
        default="real",
        help="default loop length: real=60, artistic=120",
    )
    p.add_argument("--out", required=True, help="output .gif, or a directory for PNG frames")
    _add_globals(p, suppress=True)
    p.set_defaults(handler=cmd_animate)

    p = sub.add_parser("integrate", help="cumulative flow after n steps")
    p.add_argument("--flow", required=True, help="per-frame flow (.flo)")
    p.add_argument("-n", "--steps", type=int, required=True, help="number of steps")
    p.add_argument("--backward", action="store_true", help="integrate the reversed flow")
    p.add_argument("--out", required=True, help="output .flo")
    _add_globals(p, suppress=True)
    p.set_defaults(handler=cmd_integrate)

    p = sub.add_parser("mask", help="motion mask from an attention stack and a guide mask")
    p.add_argument("--attn", required=True, help="attention stack (.atns)")
    p.add_argument("--guide", required=True, help="guide segmentation (grayscale PNG)")
    p.add_argument("--clusters", type=int, default=maskgen.DEFAULT_CLUSTERS)
    p.add_argument("--overlap", type=float, default=maskgen.DEFAULT_OVERLAP)
    p.add_argument(
        "--from-step",
        type=int,
        default=maskgen.DEFAULT_FROM_STEP,
        help="average maps with timestep id >= this",
    )
    p.add_argument("--step", type=int, default=None, help="use a single timestep instead")
    p.add_argument("--method", choices=("spectral", "kmeans"), default="spectral")
    p.add_argument(
        "--affinity",
        choices=("direct", "cosine"),
        default="direct",
        help="cluster the averaged map itself or the cosine similarity of its rows",
    )
    p.add_argument("--out", required=True, help="output mask PNG")
    _add_globals(p, suppress=True)
    p.set_defaults(handler=cmd_mask)

    p = sub.add_parser("synth-flow", help="constant flow inside a mask from a direction")
    p.add_argument("--mask", required=True, help="motion mask (grayscale PNG)")
    p.add_argument("--direction", default=None, help="direction phrase, e.g. 'left to right'")
    p.add_argument("--theta-deg", type=float, default=None, help="explicit angle in degrees")
    p.add_argument(
        "--center-angle",
        action="store_true",
        help="with --direction, use the quadrant center instead of sampling",
    )
    p.add_argument("--speed", type=float, default=1.0, help="pixels per frame (default 1.0)")
    p.add_argument("--out", required=True, help="output .flo")
    _add_globals(p, suppress=True)
    p.set_defaults(handler=cmd_synth_flow)

    p = sub.add_parser("flow-mask", help="threshold a flow field into a mask")
    p.add_argument("--flow", required=True, help="average flow (.flo)")
    p.add_argument("--tau", type=float, default=flowsynth.DEFAULT_FLOW_THRESHOLD)
    p.add_argument("--out", required=True, help="output mask PNG")
    _add_globals(p, suppress=True)
    p.set_defaults(handler=cmd_flow_mask)

    p = sub.add_parser("colorize", help="render a flow field with the color wheel")
    p.add_argument("--flow", required=True, help="flow (.flo)")
    p.add_argument(
        "--max-magnitude",
        default="auto",
        help="magnitude at full saturation; 'auto' uses the field max",
    )
    p.add_argument("--out", required=True, help="output PNG")
    _add_globals(p, suppress=True)
    p.set_defaults(handler=cmd_colorize)

    p = sub.add_parser("pca-viz", help="PCA rendering of an attention stack")
    p.add_argument("--attn", required=True, help="attention stack (.atns)")
    p.add_argument("--from-step", type=int, default=maskgen.DEFAULT_FROM_STEP)
    p.add_argument("--step", type=int, default=None, help="use a single timestep instead")
    p.add_argument("--out", required=True, help="output PNG (token-grid resolution)")
    _add_globals(p, suppress=True)
    p.set_defaults(handler=cmd_pca_viz)

    return parser


def cmd_animate(args) -> None:
    image = fileio.read_image(args.image)
    flow = fileio.read_flo(args.flow)
    mask = fileio.read_mask(args.mask)
    require_same_hw(image, flow, "image and flow")
    require_same_hw(image, mask, "image and mask")
    frames = args.frames if args.frames is not None else PRESET_FRAMES[args.preset]
    fmt = "gif" if str(args.out).lower().endswith(".gif") else "png-sequence"
    config = LoopConfig(frames=frames, fps=args.fps, fmt=fmt)
    animate(image, flow, mask, config, args.out, threads=args.threads)


def cmd_integrate(args) -> None:
    flow = fileio.read_flo(args.flow)
    if args.steps < 0:
        raise ValueError(f"step count must be >= 0, got {args.steps}")
    integrate = euler_backward if args.backward else euler_forward
    fileio.write_flo(integrate(flow, args.steps), args.out)


def _stack_affinity(stack, args):
    if args.step is not None:
        return maskgen.single_step_affinity(stack, args.step)
    return maskgen.average_attention(stack, from_step=args.from_step)


def cmd_mask(args) -> None:
    stack = fileio.read_atns(args.attn)
    guide = fileio.read_mask(args.guide)
    affinity = _stack_affinity(stack, args)
    if args.affinity == "cosine":
        affinity = maskgen.row_cosine_affinity(affinity)
    cluster = maskgen.spectral_cluster if args.method == "spectral" else maskgen.kmeans_cluster
    labels = cluster(affinity, k=args.clusters, seed=args.seed)
    cluster_masks = maskgen.labels_to_masks(
        labels, stack.grid_h, stack.grid_w, guide.shape[0], guide.shape[1]
    )
    fileio.write_mask(maskgen.select_clusters(cluster_masks, guide, args.overlap), args.out)


def cmd_synth_flow(args) -> None:
    if (args.direction is None) == (args.theta_deg is None):
        raise ValueError("give exactly one of --direction or --theta-deg")
    mask = fileio.read_mask(args.mask)
    if args.theta_deg is not None:
        theta = math.radians(args.theta_deg)
    else:
        hint = flowsynth.hint_for_phrase(
            args.direction, seed=args.seed, deterministic=args.center_angle
        )
        theta = hint.angle_theta
    fileio.write_flo(flowsynth.synth_flow(mask, theta, args.speed), args.out)


def cmd_flow_mask(args) -> None:
    flow = fileio.read_flo(args.flow)
    fileio.write_mask(flowsynth.flow_to_mask(flow, args.tau), args.out)


def cmd_colorize(args) -> None:
    flow = fileio.read_flo(args.flow)
    limit = args.max_magnitude
    if limit != "auto":
        try:
            limit = float(limit)
        except ValueError:
            raise ValueError(f"--max-magnitude must be 'auto' or a number, got {limit!r}")
    fileio.write_image(visualize.colorize_flow(flow, limit), args.out)


def cmd_pca_viz(args) -> None:
    stack = fileio.read_atns(args.attn)
    affinity = _stack_affinity(stack, args)
    fileio.write_image(maskgen.pca_visualize(affinity, stack.grid_h, stack.grid_w), args.out)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.handler(args)
    except (FormatError, OSError) as exc:
        print(f"cinemaloop: error: {exc}", file=sys.stderr)
        return 3
    except NumericsError as exc:
        print(f"cinemaloop: numerical failure: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"cinemaloop: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
