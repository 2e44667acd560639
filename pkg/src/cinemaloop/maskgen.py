"""Motion-mask generation from self-attention stacks.

A denoising sampler's self-attention layers yield, per timestep, a square
affinity over the tokens of a coarse spatial grid. Averaging the maps from
the late, low-noise timesteps and clustering that affinity groups tokens
into regions; clusters that overlap a user-supplied guide segmentation
strongly enough are kept and unioned into the final motion mask.

The default clustering is the normalized-cut spectral pipeline: symmetric
normalized Laplacian, embedding into the bottom k eigenvectors with
row normalization, then seeded k-means. Plain k-means on raw affinity rows
and single-timestep affinities are provided as baselines, and a PCA
rendering of the affinity rows is available for eyeballing the structure.

All operations are pure functions of their inputs plus an explicit seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Timesteps earlier than this are noisy and excluded from the average
# (assuming a 50-step sampling schedule).
DEFAULT_FROM_STEP = 25
# Cluster count that works for most scenes; fine structures may need more.
DEFAULT_CLUSTERS = 10
# Fraction of a cluster that must fall inside the guide mask to retain it.
DEFAULT_OVERLAP = 0.70
# Stricter retention for scenes with very fine animatable structures.
FINE_STRUCTURE_OVERLAP = 0.90

_KMEANS_RESTARTS = 10
_KMEANS_MAX_ITER = 300
_SYMMETRY_TOL = 1e-6
_DEGREE_FLOOR = 1e-12


@dataclass(eq=False)
class AttentionStack:
    """Per-timestep token affinities over a grid_h x grid_w token grid."""

    timestep_ids: list[int]
    maps: np.ndarray  # (T, S, S) float32, S = grid_h * grid_w
    grid_h: int = 32
    grid_w: int = 32

    def __post_init__(self):
        self.maps = np.ascontiguousarray(np.asarray(self.maps, dtype=np.float32))
        self.timestep_ids = [int(t) for t in self.timestep_ids]
        side = self.grid_h * self.grid_w
        if self.maps.ndim != 3 or self.maps.shape[1:] != (side, side):
            raise ValueError(
                f"maps must be (T, {side}, {side}) for a "
                f"{self.grid_h}x{self.grid_w} grid, got {self.maps.shape}"
            )
        if len(self.timestep_ids) != self.maps.shape[0]:
            raise ValueError("timestep_ids and maps disagree on length")
        if self.maps.shape[0] == 0:
            raise ValueError("empty stack")
        if not np.isfinite(self.maps).all():
            raise ValueError("attention maps contain non-finite values")
        if self.maps.min() < 0.0:
            raise ValueError("attention maps must be nonnegative")


def _as_affinity(affinity, check_symmetry: bool = True) -> np.ndarray:
    a = np.asarray(affinity, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"affinity must be square, got shape {a.shape}")
    if check_symmetry and not np.allclose(a, a.T, atol=_SYMMETRY_TOL, rtol=0.0):
        raise ValueError("affinity is not symmetric")
    return a


def _symmetrize(a: np.ndarray) -> np.ndarray:
    return (a + a.T) / 2.0


def average_attention(stack: AttentionStack, from_step: int = DEFAULT_FROM_STEP) -> np.ndarray:
    """Mean of the maps with timestep id >= from_step, symmetrized."""
    retained = [m for t, m in zip(stack.timestep_ids, stack.maps) if t >= from_step]
    if not retained:
        raise ValueError(
            f"no timesteps >= {from_step}; stack has {sorted(stack.timestep_ids)}"
        )
    mean = np.mean(np.asarray(retained, dtype=np.float64), axis=0)
    return _symmetrize(mean)


def single_step_affinity(stack: AttentionStack, step: int) -> np.ndarray:
    """One timestep's map, symmetrized, without averaging (baseline)."""
    for t, m in zip(stack.timestep_ids, stack.maps):
        if t == step:
            return _symmetrize(np.asarray(m, dtype=np.float64))
    raise ValueError(f"timestep {step} not in stack {sorted(stack.timestep_ids)}")


def row_cosine_affinity(affinity) -> np.ndarray:
    """Cosine similarity between affinity rows, an alternative clustering input."""
    a = _as_affinity(affinity, check_symmetry=False)
    norms = np.maximum(np.linalg.norm(a, axis=1), _DEGREE_FLOOR)
    cos = (a @ a.T) / np.outer(norms, norms)
    return _symmetrize(cos)


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centers[0] = points[first]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0.0:
            pick = int(rng.choice(n, p=d2 / total))
        else:
            pick = int(rng.integers(n))
        centers[j] = points[pick]
        d2 = np.minimum(d2, ((points - centers[j]) ** 2).sum(axis=1))
    return centers


def _sq_distances(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d2 = (
        (points**2).sum(axis=1)[:, None]
        + (centers**2).sum(axis=1)[None, :]
        - 2.0 * points @ centers.T
    )
    return np.maximum(d2, 0.0)


def _repair_empty(new_labels: np.ndarray, d2: np.ndarray, k: int) -> None:
    # Hand each starved cluster the point farthest from its assignment,
    # stealing only from clusters that keep at least one member.
    n = new_labels.shape[0]
    while True:
        counts = np.bincount(new_labels, minlength=k)
        empty = np.flatnonzero(counts == 0)
        if empty.size == 0:
            return
        eligible = counts[new_labels] > 1
        dist = np.where(eligible, d2[np.arange(n), new_labels], -1.0)
        worst = int(dist.argmax())
        new_labels[worst] = int(empty[0])
        d2[worst] = 0.0


def _lloyd(points: np.ndarray, centers: np.ndarray, max_iter: int) -> tuple[np.ndarray, float]:
    n, k = points.shape[0], centers.shape[0]
    labels = None
    for _ in range(max_iter):
        d2 = _sq_distances(points, centers)
        new_labels = d2.argmin(axis=1)
        _repair_empty(new_labels, d2, k)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        centers = np.stack([points[labels == j].mean(axis=0) for j in range(k)])
    inertia = float(_sq_distances(points, centers)[np.arange(n), labels].sum())
    return labels, inertia


def _kmeans(points: np.ndarray, k: int, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(seed))
    best_labels, best_inertia = None, np.inf
    for _ in range(_KMEANS_RESTARTS):
        centers = _kmeans_pp_init(points, k, rng)
        labels, inertia = _lloyd(points, centers, _KMEANS_MAX_ITER)
        if inertia < best_inertia:
            best_labels, best_inertia = labels, inertia
    return best_labels.astype(np.intp)


def spectral_cluster(affinity, k: int = DEFAULT_CLUSTERS, seed: int = 0) -> np.ndarray:
    """Cluster tokens by the normalized spectral embedding of the affinity.

    Builds L = I - D^(-1/2) A D^(-1/2) with degrees floored at 1e-12 for
    isolated tokens, embeds each token in the k eigenvectors of smallest
    eigenvalue, row-normalizes, and runs seeded k-means (k-means++ init,
    10 restarts, best inertia).
    """
    a = _symmetrize(_as_affinity(affinity))
    n = a.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"cluster count {k} outside [1, {n}]")
    degrees = np.maximum(a.sum(axis=1), _DEGREE_FLOOR)
    inv_sqrt = 1.0 / np.sqrt(degrees)
    lap = np.eye(n) - inv_sqrt[:, None] * a * inv_sqrt[None, :]
    _, vecs = np.linalg.eigh(lap)
    embed = vecs[:, :k]
    norms = np.maximum(np.linalg.norm(embed, axis=1), _DEGREE_FLOOR)
    embed = embed / norms[:, None]
    return _kmeans(embed, k, seed)


def kmeans_cluster(affinity, k: int = DEFAULT_CLUSTERS, seed: int = 0) -> np.ndarray:
    """Baseline: Lloyd's algorithm directly on affinity rows as features."""
    a = _as_affinity(affinity, check_symmetry=False)
    n = a.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"cluster count {k} outside [1, {n}]")
    return _kmeans(a, k, seed)


def labels_to_masks(
    labels: np.ndarray, grid_h: int, grid_w: int, out_h: int, out_w: int
) -> list[np.ndarray]:
    """One boolean mask per nonempty label, nearest-neighbor upsampled."""
    labels = np.asarray(labels)
    if labels.size != grid_h * grid_w:
        raise ValueError(
            f"got {labels.size} labels for a {grid_h}x{grid_w} grid"
        )
    grid = labels.reshape(grid_h, grid_w)
    sy = (np.arange(out_h) * grid_h) // out_h
    sx = (np.arange(out_w) * grid_w) // out_w
    upsampled = grid[sy][:, sx]
    return [upsampled == lab for lab in np.unique(labels)]


def select_clusters(
    cluster_masks: list[np.ndarray], guide: np.ndarray, threshold: float = DEFAULT_OVERLAP
) -> np.ndarray:
    """Union of the clusters sufficiently covered by the guide mask.

    A cluster is retained when |cluster & guide| / |cluster| >= threshold;
    empty clusters never qualify.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    guide = np.asarray(guide, dtype=bool)
    out = np.zeros_like(guide)
    for mask in cluster_masks:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != guide.shape:
            raise ValueError(f"cluster mask {mask.shape} vs guide {guide.shape}")
        size = int(mask.sum())
        if size == 0:
            continue
        if int((mask & guide).sum()) / size >= threshold:
            out |= mask
    return out


def iou(a: np.ndarray, b: np.ndarray) -> float:
    """Intersection over union of two masks; 0.0 when both are empty."""
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise ValueError(f"mask shapes differ: {a.shape} vs {b.shape}")
    union = int((a | b).sum())
    if union == 0:
        return 0.0
    return int((a & b).sum()) / union


def attention_pca(affinity, n_components: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """Principal components of the affinity rows.

    Returns (projections, components): the rows projected onto the leading
    components, and the component directions themselves (one per row).
    """
    a = _as_affinity(affinity, check_symmetry=False)
    centered = a - a.mean(axis=0)
    u, s, vt = np.linalg.svd(centered, full_matrices=False)
    m = min(n_components, vt.shape[0])
    return u[:, :m] * s[:m], vt[:m]


def pca_visualize(affinity, grid_h: int, grid_w: int) -> np.ndarray:
    """Render the top-3 principal components of the rows as an RGB grid.

    Each component is min-max normalized to [0, 1]; a component with no
    variance renders as 0.5, so an all-equal-rows affinity comes out as a
    uniform mid-gray image.
    """
    a = _as_affinity(affinity, check_symmetry=False)
    if a.shape[0] != grid_h * grid_w:
        raise ValueError(
            f"affinity has {a.shape[0]} tokens, grid needs {grid_h * grid_w}"
        )
    projections, _ = attention_pca(a, 3)
    out = np.full((grid_h * grid_w, 3), 0.5, dtype=np.float64)
    for j in range(projections.shape[1]):
        comp = projections[:, j]
        span = comp.max() - comp.min()
        if span > _DEGREE_FLOOR:
            out[:, j] = (comp - comp.min()) / span
    return out.reshape(grid_h, grid_w, 3).astype(np.float32)
