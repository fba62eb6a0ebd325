"""Smooth random displacement fields and mask warping.

A field is uniform noise drawn on a coarse control lattice and trilinearly
upsampled to the target grid, which bounds how fast it can vary between
neighboring voxels. Masks are warped backward: output voxel v samples the
input (as reals, trilinear) at v + field(v) and thresholds at 0.5, ties
counting as foreground. Samples outside the grid read 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import map_coordinates, maximum_filter

from synthhead.volume import MaskVolume


@dataclass(frozen=True, eq=False)
class DisplacementField:
    """Per-voxel displacement vectors, in voxel units.

    ``max_magnitude`` is the actual largest vector length in the field;
    ``smoothness_bound`` caps the component difference between any two
    6-neighbor voxels, as guaranteed by the sampling construction.
    """

    vectors: np.ndarray  # (nx, ny, nz, 3) float32
    max_magnitude: float
    smoothness_bound: float

    def __post_init__(self):
        vectors = np.ascontiguousarray(self.vectors, dtype=np.float32)
        if vectors.ndim != 4 or vectors.shape[3] != 3:
            raise ValueError(f"vectors must have shape (nx, ny, nz, 3), got {vectors.shape}")
        vectors.setflags(write=False)
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "max_magnitude", float(self.max_magnitude))
        object.__setattr__(self, "smoothness_bound", float(self.smoothness_bound))
        # largest absolute component: bounds how far content can move
        comp = float(np.abs(vectors).max()) if vectors.size else 0.0
        object.__setattr__(self, "_max_component", comp)

    @property
    def dims(self):
        return self.vectors.shape[:3]


def zero_field(dims):
    dims = tuple(int(d) for d in dims)
    return DisplacementField(
        np.zeros(dims + (3,), dtype=np.float32), max_magnitude=0.0, smoothness_bound=0.0
    )


def sample_displacement_field(rng, dims, control_spacing, max_disp):
    """Draw a smooth random field: coarse uniform noise, trilinearly upsampled.

    Control nodes sit at multiples of ``control_spacing`` voxels, one node
    row past the far edge, each holding an independent uniform draw in
    [-max_disp, max_disp] per component.
    """
    dims = tuple(int(d) for d in dims)
    control_spacing = int(control_spacing)
    max_disp = float(max_disp)
    if control_spacing < 2:
        raise ValueError(f"control_spacing must be >= 2, got {control_spacing}")
    if max_disp < 0:
        raise ValueError(f"max_disp must be >= 0, got {max_disp}")

    nodes = tuple(int(np.ceil((d - 1) / control_spacing)) + 1 for d in dims)
    gen = rng.generator()
    coarse = gen.uniform(-max_disp, max_disp, size=nodes + (3,)).astype(np.float32)

    # last axis first: the final (largest) pass then writes contiguous
    # leading-axis slabs
    field = coarse
    for axis in (2, 1, 0):
        field = _upsample_axis(field, dims[axis], control_spacing, axis)

    if max_disp == 0.0:
        max_magnitude = 0.0
    else:
        max_magnitude = float(np.sqrt(np.einsum("...i,...i->...", field, field).max()))
    return DisplacementField(
        vectors=field,
        max_magnitude=max_magnitude,
        smoothness_bound=2.0 * max_disp / control_spacing,
    )


def _upsample_axis(data, dim, spacing, axis):
    """Linear interpolation along one axis at positions i / spacing.

    Output index i blends lattice nodes floor(i/spacing) and the next,
    computed cell by cell so each output element is written once instead
    of gathered twice.
    """
    positions = np.arange(dim, dtype=np.float64) / spacing
    last = data.shape[axis] - 1
    i0 = np.minimum(np.floor(positions).astype(np.intp), last)
    frac = (positions - i0).astype(data.dtype)

    out_shape = list(data.shape)
    out_shape[axis] = dim
    out = np.empty(out_shape, dtype=data.dtype)
    head = (slice(None),) * axis
    f_shape = (-1,) + (1,) * (data.ndim - 1 - axis)
    start = 0
    while start < dim:
        cell = i0[start]
        stop = start
        while stop < dim and i0[stop] == cell:
            stop += 1
        f = frac[start:stop].reshape(f_shape)
        lo = data[head + (slice(cell, cell + 1),)]
        hi = data[head + (slice(min(cell + 1, last), min(cell + 1, last) + 1),)]
        out[head + (slice(start, stop),)] = lo * (1 - f) + hi * f
        start = stop
    return out


def _sample_trilinear(scene, coords):
    # mode="constant" reads exactly 0 outside [0, n-1] per axis, matching
    # the out-of-bounds contract; prefilter off keeps order-1 pure trilinear.
    # Bool scenes go in as uint8 views: the kernel works on exact 0/1
    # doubles either way, so the result matches a float32 scene bit for bit.
    if scene.dtype == bool:
        scene = scene.view(np.uint8)
    return map_coordinates(
        scene, coords, output=np.float32, order=1,
        mode="constant", cval=0.0, prefilter=False,
    )


def _support_bounds(data):
    """Per-axis (first, last) index with any foreground; None when empty."""
    bounds = []
    for axis in range(3):
        other = tuple(a for a in range(3) if a != axis)
        nz = np.flatnonzero(data.any(axis=other))
        if nz.size == 0:
            return None
        bounds.append((int(nz[0]), int(nz[-1])))
    return bounds


# Above this padding radius the dilated support fills most of its
# bounding window, and sampling the window densely beats building the
# candidate point list. Both branches produce identical bits, so the
# cutoff is purely a speed knob.
_DENSE_PAD = 6


def warp_mask(mask, field):
    """Warp a binary mask with the field (backward, trilinear, >= 0.5 rule).

    An output voxel v can only be foreground when some input voxel lies
    within |field(v)| + 1 of it (the interpolation cell around
    v + field(v)), so only the input support dilated by
    ceil(max |field component|) + 1 in Chebyshev distance needs to be
    sampled; everything else is provably background. Small dilations
    sample that candidate set as a point list, large ones sample its
    bounding window densely.
    """
    if mask.dims != field.dims:
        raise ValueError(f"mask dims {mask.dims} do not match field dims {field.dims}")
    out = np.zeros(mask.dims, dtype=bool)
    bounds = _support_bounds(mask.data)
    if bounds is None:
        return MaskVolume(out, spacing=mask.spacing, affine=mask.affine)
    if field._max_component == 0.0:
        return MaskVolume(mask.data.copy(), spacing=mask.spacing, affine=mask.affine)

    pad = int(np.ceil(field._max_component)) + 1
    lo = [max(b[0] - pad, 0) for b in bounds]
    hi = [min(b[1] + pad, d - 1) for b, d in zip(bounds, mask.dims)]
    window = tuple(slice(l, h + 1) for l, h in zip(lo, hi))

    if pad >= _DENSE_PAD:
        wshape = tuple(h - l + 1 for l, h in zip(lo, hi))
        pos = np.empty((3,) + wshape, dtype=np.float32)
        pos[0] = np.arange(lo[0], hi[0] + 1, dtype=np.float32)[:, None, None]
        pos[1] = np.arange(lo[1], hi[1] + 1, dtype=np.float32)[None, :, None]
        pos[2] = np.arange(lo[2], hi[2] + 1, dtype=np.float32)[None, None, :]
        vec = field.vectors[window]
        for axis in range(3):
            pos[axis] += vec[..., axis]
        sampled = _sample_trilinear(mask.data, pos.reshape(3, -1))
        out[window] = (sampled >= 0.5).reshape(wshape)
        return MaskVolume(out, spacing=mask.spacing, affine=mask.affine)

    # the dilation stays inside the window because it is padded by the
    # same radius as the dilation
    candidates = maximum_filter(
        mask.data[window], size=2 * pad + 1, mode="constant", cval=False
    )
    idx = np.argwhere(candidates)
    for axis in range(3):
        idx[:, axis] += lo[axis]
    vec = field.vectors[idx[:, 0], idx[:, 1], idx[:, 2]]
    # integer voxel positions are exact in float32, so both branches
    # feed the sampler identical coordinates
    coords = np.ascontiguousarray((idx.astype(np.float32) + vec).T)

    sampled = _sample_trilinear(mask.data, coords)
    out[idx[:, 0], idx[:, 1], idx[:, 2]] = sampled >= 0.5
    return MaskVolume(out, spacing=mask.spacing, affine=mask.affine)
