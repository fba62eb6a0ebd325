"""From model output to the final brain mask.

The three-class prediction is collapsed to labels, the class-1 voxels are
split into connected components (6-connectivity, with the class-2
boundary band acting as a separator), the largest component wins (ties go
to the one whose centroid is nearest the volume center), and its interior
holes are filled. An input with no class-1 voxels yields ``None`` — an
empty-brain signal for the caller to turn into an error or an exit code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from synthhead.volume import LABEL_BRAIN, LabelVolume, MaskVolume

_PROB_SUM_TOLERANCE = 1e-3


def argmax_labels(probs, spacing=(1.0, 1.0, 1.0), affine=None):
    """Collapse per-voxel class probabilities (nx, ny, nz, 3) to labels.

    Ties break toward the lower class index. Voxels whose probabilities
    do not sum to 1 within 1e-3 make the input invalid.
    """
    probs = np.asarray(probs)
    if probs.ndim != 4 or probs.shape[3] != 3:
        raise ValueError(f"expected probabilities of shape (nx, ny, nz, 3), got {probs.shape}")
    sums = probs.sum(axis=-1, dtype=np.float64)
    # written so NaN sums fail the gate too
    if not np.all(np.abs(sums - 1.0) <= _PROB_SUM_TOLERANCE):
        worst = float(np.nanmax(np.abs(sums - 1.0)))
        raise ValueError(
            f"class probabilities must sum to 1 within {_PROB_SUM_TOLERANCE}; "
            f"worst deviation {worst:.6g}"
        )
    data = np.argmax(probs, axis=-1).astype(np.uint8)
    return LabelVolume(data, spacing=spacing, affine=affine)


@dataclass(frozen=True, eq=False)
class ComponentSet:
    """Connected-component labeling of a mask.

    ``labels`` holds 0 for background and 1..count for components;
    ``sizes[i]`` and ``centroids[i]`` describe component i+1.
    """

    labels: np.ndarray
    count: int
    sizes: tuple
    centroids: tuple

    def __post_init__(self):
        self.labels.setflags(write=False)


def _structure(connectivity):
    if connectivity == 6:
        return ndimage.generate_binary_structure(3, 1)
    if connectivity == 26:
        return ndimage.generate_binary_structure(3, 3)
    raise ValueError(f"connectivity must be 6 or 26, got {connectivity}")


def connected_components(mask, connectivity=6):
    """Label connected foreground regions; ids are contiguous from 1."""
    data = mask.data if isinstance(mask, MaskVolume) else np.asarray(mask, dtype=bool)
    labels, count = ndimage.label(data, structure=_structure(connectivity))
    if count == 0:
        return ComponentSet(labels=labels, count=0, sizes=(), centroids=())

    flat = labels.ravel()
    sizes = np.bincount(flat, minlength=count + 1)[1:]
    coords = np.argwhere(labels > 0)
    ids = flat[flat > 0]
    sums = np.zeros((count + 1, 3), dtype=np.float64)
    np.add.at(sums, ids, coords)
    centroids = sums[1:] / sizes[:, None]
    return ComponentSet(
        labels=labels,
        count=int(count),
        sizes=tuple(int(s) for s in sizes),
        centroids=tuple(tuple(map(float, c)) for c in centroids),
    )


def fill_holes(mask):
    """Fill background regions not 6-connected to the volume border."""
    filled = ndimage.binary_fill_holes(
        mask.data, structure=ndimage.generate_binary_structure(3, 1)
    )
    return MaskVolume(filled, spacing=mask.spacing, affine=mask.affine)


def select_brain_mask(labels):
    """Pick the winning class-1 component and fill its holes.

    Winner = largest voxel count; ties by centroid distance to the volume
    center, then by component id. Returns ``None`` when no class-1 voxel
    exists (the empty-brain signal).
    """
    if not isinstance(labels, LabelVolume):
        raise TypeError(f"expected LabelVolume, got {type(labels).__name__}")
    class1 = labels.data == LABEL_BRAIN
    if not class1.any():
        return None

    comps = connected_components(class1, connectivity=6)
    center = np.array([(n - 1) / 2.0 for n in labels.dims])

    def rank(i):
        dist = float(np.linalg.norm(np.asarray(comps.centroids[i]) - center))
        return (-comps.sizes[i], dist, i)

    winner = min(range(comps.count), key=rank) + 1
    mask = MaskVolume(
        comps.labels == winner, spacing=labels.spacing, affine=labels.affine
    )
    return fill_holes(mask)
