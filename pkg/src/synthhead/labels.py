"""Three-class training target: brain, boundary band, background.

The boundary band is the dilation of the brain mask minus the mask
itself: a thin outer margin that separates the brain blob from
everything else so post-processing can isolate it.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import binary_dilation, generate_binary_structure, maximum_filter1d

from synthhead.volume import (
    LABEL_BOUNDARY,
    LABEL_BRAIN,
    LabelVolume,
    MaskVolume,
)


def _chebyshev_dilate(data, radius):
    # r iterations with the full 3x3x3 element equal one Chebyshev-ball
    # dilation of radius r, which separates into three 1D max filters.
    out = data.astype(np.uint8)
    size = 2 * radius + 1
    for axis in range(3):
        out = maximum_filter1d(out, size=size, axis=axis, mode="constant", cval=0)
    return out.astype(bool)


def dilate(mask, radius, connectivity="26-connected"):
    """Iterated morphological dilation; radius 0 returns the input."""
    radius = int(radius)
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    if connectivity not in ("6-connected", "26-connected"):
        raise ValueError(f"unknown connectivity {connectivity!r}")
    if radius == 0:
        return MaskVolume(mask.data.copy(), spacing=mask.spacing, affine=mask.affine)

    # grown voxels are within `radius` of the input support, so the
    # filter only needs to run on the bounding box padded that far
    idx = np.argwhere(mask.data)
    grown = np.zeros(mask.dims, dtype=bool)
    if idx.size:
        lo = np.maximum(idx.min(axis=0) - radius, 0)
        hi = np.minimum(idx.max(axis=0) + radius, np.array(mask.dims) - 1)
        window = tuple(slice(l, h + 1) for l, h in zip(lo, hi))
        if connectivity == "26-connected":
            grown[window] = _chebyshev_dilate(mask.data[window], radius)
        else:
            structure = generate_binary_structure(3, 1)
            grown[window] = binary_dilation(
                mask.data[window], structure=structure, iterations=radius
            )
    return MaskVolume(grown, spacing=mask.spacing, affine=mask.affine)


def make_labels(brain, cfg):
    """Label grid: 1 on the brain, 2 on its outer band, 0 elsewhere."""
    cfg.validate()
    if brain.count() == 0:
        raise ValueError("brain mask is empty; labels would be all background")
    grown = dilate(brain, cfg.band_thickness, cfg.structuring_element)
    # grown covers the brain, so band everywhere first (0 stays
    # LABEL_BACKGROUND), then overwrite the brain voxels
    data = grown.data.view(np.uint8) * np.uint8(LABEL_BOUNDARY)
    data[brain.data] = LABEL_BRAIN
    return LabelVolume(data, spacing=brain.spacing, affine=brain.affine)
