"""Segmentation overlap and surface-distance metrics.

Undefined cases (empty masks) return ``None`` rather than 0 or infinity,
so aggregate statistics cannot silently absorb degenerate pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import distance_transform_edt

from synthhead.volume import MaskVolume


def _counts(a, b):
    if a.dims != b.dims:
        raise ValueError(f"mask dims differ: {a.dims} vs {b.dims}")
    inter = int(np.count_nonzero(a.data & b.data))
    return inter, a.count(), b.count()


def dice(a, b):
    """2|a∩b| / (|a|+|b|); None when both masks are empty."""
    inter, na, nb = _counts(a, b)
    if na + nb == 0:
        return None
    return 2.0 * inter / (na + nb)


def jaccard(a, b):
    """|a∩b| / |a∪b|; None when both masks are empty."""
    inter, na, nb = _counts(a, b)
    union = na + nb - inter
    if union == 0:
        return None
    return inter / union


def _directed_distances(src, dst, spacing):
    # Distance from every src voxel center to the nearest dst voxel
    # center, via the exact Euclidean distance transform of dst's
    # complement with anisotropic sampling.
    dt = distance_transform_edt(~dst.data, sampling=spacing)
    return dt[src.data]


def hausdorff(a, b, spacing=(1.0, 1.0, 1.0), percentile=None):
    """Symmetric Hausdorff distance between foreground voxel-center sets.

    ``percentile`` (e.g. 95) replaces the max of each directed distance
    distribution with that percentile, a common robust variant. Returns
    None when either mask is empty.
    """
    if a.dims != b.dims:
        raise ValueError(f"mask dims differ: {a.dims} vs {b.dims}")
    if a.count() == 0 or b.count() == 0:
        return None
    spacing = tuple(float(s) for s in spacing)
    d_ab = _directed_distances(a, b, spacing)
    d_ba = _directed_distances(b, a, spacing)
    if percentile is None:
        return float(max(d_ab.max(), d_ba.max()))
    if not 0 < float(percentile) <= 100:
        raise ValueError(f"percentile must lie in (0, 100], got {percentile}")
    return float(
        max(np.percentile(d_ab, percentile), np.percentile(d_ba, percentile))
    )


@dataclass(frozen=True)
class MetricReport:
    """One evaluated pair; fields are None where the metric is undefined."""

    dice: float | None
    jaccard: float | None
    hausdorff_mm: float | None


def evaluate_pair(pred, gt, spacing=(1.0, 1.0, 1.0), percentile=None):
    if not isinstance(pred, MaskVolume) or not isinstance(gt, MaskVolume):
        raise TypeError("evaluate_pair expects two MaskVolumes")
    return MetricReport(
        dice=dice(pred, gt),
        jaccard=jaccard(pred, gt),
        hausdorff_mm=hausdorff(pred, gt, spacing=spacing, percentile=percentile),
    )
