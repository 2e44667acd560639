"""Deterministic looping cinemagraphs from a still image, a constant
per-frame flow field, and a motion mask.

The core path is: zero the flow outside the mask, Euler-integrate it into
cumulative flows for every frame index, forward-splat the input image
along both directions, and blend with complementary weights so the first
and last frames reproduce the input exactly. Around that sit motion-mask
generation from self-attention stacks, direction-phrase flow synthesis,
flow visualization, and the file formats that tie the stages together.
"""

from .errors import CinemaloopError, FormatError, NumericsError
from .euler import CumulativeFlowPair, euler_backward, euler_forward, integrate_sequence
from .fields import as_flow, as_image, as_mask, mask_flow, reverse_flow, sample_bilinear
from .fileio import (
    read_atns,
    read_flo,
    read_image,
    read_mask,
    write_atns,
    write_flo,
    write_gif,
    write_image,
    write_mask,
)
from .flowsynth import (
    CANONICAL_PHRASES,
    DirectionHint,
    flow_to_mask,
    hint_for_phrase,
    hint_from_angle,
    quadrant_center,
    quadrant_for_phrase,
    quadrant_of_angle,
    sample_angle,
    synth_flow,
)
from .loop import LoopConfig, PRESET_FRAMES, animate, generate_loop
from .maskgen import (
    AttentionStack,
    attention_pca,
    average_attention,
    iou,
    kmeans_cluster,
    labels_to_masks,
    pca_visualize,
    row_cosine_affinity,
    select_clusters,
    single_step_affinity,
    spectral_cluster,
)
from .splat import (
    BlendSchedule,
    SplatAccumulator,
    composite_symmetric,
    fill_holes,
    forward_splat,
    symmetric_splat_frame,
)
from .visualize import colorize_flow

__version__ = "0.1.0"

__all__ = [
    "AttentionStack",
    "BlendSchedule",
    "CANONICAL_PHRASES",
    "CinemaloopError",
    "CumulativeFlowPair",
    "DirectionHint",
    "FormatError",
    "LoopConfig",
    "NumericsError",
    "PRESET_FRAMES",
    "SplatAccumulator",
    "animate",
    "as_flow",
    "as_image",
    "as_mask",
    "attention_pca",
    "average_attention",
    "colorize_flow",
    "composite_symmetric",
    "euler_backward",
    "euler_forward",
    "fill_holes",
    "flow_to_mask",
    "forward_splat",
    "generate_loop",
    "hint_for_phrase",
    "hint_from_angle",
    "integrate_sequence",
    "iou",
    "kmeans_cluster",
    "labels_to_masks",
    "mask_flow",
    "pca_visualize",
    "quadrant_center",
    "quadrant_for_phrase",
    "quadrant_of_angle",
    "read_atns",
    "read_flo",
    "read_image",
    "read_mask",
    "reverse_flow",
    "row_cosine_affinity",
    "sample_angle",
    "sample_bilinear",
    "select_clusters",
    "single_step_affinity",
    "spectral_cluster",
    "symmetric_splat_frame",
    "synth_flow",
    "write_atns",
    "write_flo",
    "write_gif",
    "write_image",
    "write_mask",
]
