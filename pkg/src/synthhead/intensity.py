"""Intensity painting: turn warped masks into a noisy scalar image.

Painting order, later passes overwriting earlier ones:

1. background noise over the whole grid;
2. shell, split into ``outer_parts`` nearest-seed regions, each region
   filled with Normal(mean, std) noise whose parameters are drawn from
   the outer ranges;
3. brain, likewise with the inner ranges and ``inner_parts``;
4. artifact blobs with Normal(small_mean, small_std);
5. artifact holes repainted with the background statistics.

The painted image is then clamped to >= 0 and divided by its maximum.
All draws come from a single generator in the order above, so the result
is a pure function of (masks, params, stream).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from synthhead.shapes import ARTIFACT_HOLE
from synthhead.volume import MaskVolume, ScalarVolume


@dataclass(frozen=True)
class RegionInfo:
    """Painting transcript for statistical verification.

    ``raw`` is the image before clamping and normalization; the params
    tuples hold the (mean, std) actually drawn for each region label.
    ``artifact_mask`` is the union of artifact voxels, which overwrite
    whatever was painted below them; statistics for a region are valid
    over its voxels minus this mask. ``background_mask`` marks voxels
    painted only by the background pass.
    """

    raw: np.ndarray
    shell_labels: np.ndarray
    shell_params: tuple
    brain_labels: np.ndarray
    brain_params: tuple
    artifact_mask: np.ndarray
    background_mask: np.ndarray


def partition_mask(mask, k, rng, return_seeds=False):
    """Split a mask into k nearest-seed regions; labels 1..k, 0 off-mask.

    Seeds are k distinct voxels drawn uniformly from the mask; every mask
    voxel joins the seed nearest in Euclidean voxel distance, ties going
    to the lowest seed index. Every region is non-empty (it contains at
    least its own seed). ``return_seeds`` additionally returns the seed
    coordinates, one row per region label.
    """
    k = int(k)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > 255:
        raise ValueError(f"k must be <= 255, got {k}")
    count = mask.count()
    if count == 0:
        raise ValueError("cannot partition an empty mask")
    if k > count:
        raise ValueError(f"k={k} exceeds mask voxel count {count}")

    coords, label, seeds = _partition_flat(mask, k, rng)
    out = np.zeros(mask.dims, dtype=np.uint8)
    out[coords[:, 0], coords[:, 1], coords[:, 2]] = label
    return (out, seeds) if return_seeds else out


def _partition_flat(mask, k, rng):
    """Nearest-seed assignment over the mask's voxel list (C order)."""
    coords = np.argwhere(mask.data).astype(np.int32)
    count = coords.shape[0]
    gen = rng.generator()
    seeds = coords[gen.choice(count, size=k, replace=False)]

    # Integer squared distances: exact, so tie-breaking is well defined.
    best = np.full(count, np.iinfo(np.int32).max, dtype=np.int32)
    label = np.zeros(count, dtype=np.uint8)
    cols = [np.ascontiguousarray(coords[:, a]) for a in range(3)]
    d2 = np.empty(count, dtype=np.int32)
    tmp = np.empty(count, dtype=np.int32)
    for i, s in enumerate(seeds):
        np.subtract(cols[0], s[0], out=d2)
        d2 *= d2
        np.subtract(cols[1], s[1], out=tmp)
        tmp *= tmp
        d2 += tmp
        np.subtract(cols[2], s[2], out=tmp)
        tmp *= tmp
        d2 += tmp
        closer = d2 < best
        best[closer] = d2[closer]
        label[closer] = i + 1
    return coords, label, seeds


def _paint(data, region_bool, mean, std, gen):
    n = int(np.count_nonzero(region_bool))
    if n == 0:
        return
    noise = gen.standard_normal(n, dtype=np.float32)
    data[region_bool] = np.float32(mean) + np.float32(std) * noise


def fill_gaussian(img, region, mean, std, rng):
    """Overwrite the region's voxels with Normal(mean, std) draws."""
    if float(std) < 0:
        raise ValueError(f"std must be >= 0, got {std}")
    if img.dims != region.dims:
        raise ValueError(f"image dims {img.dims} do not match region dims {region.dims}")
    data = img.data.copy()
    _paint(data, region.data, float(mean), float(std), rng.generator())
    return ScalarVolume(data, spacing=img.spacing, affine=img.affine)


def _scatter_paint(data, points, mean, std, gen):
    n = points.shape[0]
    if n == 0:
        return
    noise = gen.standard_normal(n, dtype=np.float32)
    data[points[:, 0], points[:, 1], points[:, 2]] = (
        np.float32(mean) + np.float32(std) * noise
    )


def _paint_partitioned(data, mask, parts, mean_range, std_range, gen, rng_partition):
    """Partition a mask and fill each region; returns (coords, label, params)."""
    if mask.count() == 0:
        return np.zeros((0, 3), dtype=np.int32), np.zeros(0, dtype=np.uint8), ()
    coords, label, _ = _partition_flat(mask, parts, rng_partition)
    params = []
    for r in range(1, parts + 1):
        mean = float(gen.uniform(*mean_range))
        std = float(gen.uniform(*std_range))
        params.append((mean, std))
        _scatter_paint(data, coords[label == r], mean, std, gen)
    return coords, label, tuple(params)


def _label_grid(dims, coords, label):
    out = np.zeros(dims, dtype=np.uint8)
    out[coords[:, 0], coords[:, 1], coords[:, 2]] = label
    return out


def synthesize_intensity(shapes, params, rng, normalize=True, return_regions=False):
    """Paint a full intensity image from warped shape masks.

    Returns a ScalarVolume, or (ScalarVolume, RegionInfo) when
    ``return_regions`` is set. With ``normalize`` off the clamp and the
    divide-by-max rescale are both skipped (useful for statistics checks).
    """
    params.validate()
    shell, brain = shapes.shell, shapes.brain
    dims = shell.dims
    if brain.dims != dims or any(m.dims != dims for m, _ in shapes.artifacts):
        raise ValueError("all shape masks must share the same dims")

    gen = rng.generator()
    data = gen.standard_normal(dims, dtype=np.float32)
    data *= np.float32(params.background_std)
    data += np.float32(params.background_mean)

    shell_coords, shell_label, shell_params = _paint_partitioned(
        data, shell, int(params.outer_parts),
        params.outer_mean_range, params.outer_std_range,
        gen, rng.child(1),
    )
    brain_coords, brain_label, brain_params = _paint_partitioned(
        data, brain, int(params.inner_parts),
        params.inner_mean_range, params.inner_std_range,
        gen, rng.child(2),
    )

    artifact_points = []
    for mask, kind in shapes.artifacts:
        points = np.argwhere(mask.data).astype(np.int32)
        if kind == ARTIFACT_HOLE:
            _scatter_paint(data, points, params.background_mean, params.background_std, gen)
        else:
            _scatter_paint(data, points, params.small_mean, params.small_std, gen)
        artifact_points.append(points)

    info = None
    if return_regions:
        artifact_union = np.zeros(dims, dtype=bool)
        for points in artifact_points:
            artifact_union[points[:, 0], points[:, 1], points[:, 2]] = True
        info = RegionInfo(
            raw=data.copy(),
            shell_labels=_label_grid(dims, shell_coords, shell_label),
            shell_params=shell_params,
            brain_labels=_label_grid(dims, brain_coords, brain_label),
            brain_params=brain_params,
            artifact_mask=artifact_union,
            background_mask=~(shell.data | brain.data | artifact_union),
        )

    if normalize:
        np.maximum(data, 0.0, out=data)
        peak = float(data.max())
        if peak <= 0.0:
            raise ValueError("image is identically zero after clamping; cannot normalize")
        data /= np.float32(peak)

    vol = ScalarVolume(data, spacing=shell.spacing, affine=shell.affine)
    return (vol, info) if return_regions else vol
