"""Head geometry sampling and ellipsoid rasterization.

A sample's geometry is a large outer ellipsoid whose interior cavity is
carved out by a second, concentric ellipsoid (leaving a hollow shell),
a brain ellipsoid strictly inside the cavity, and a handful of small
artifact ellipsoids (bright blobs or carved holes). All ellipsoids are
axis-aligned; shape variety comes from the deformation stage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from synthhead.errors import ConfigError, OutOfBoundsError
from synthhead.volume import MaskVolume

MAX_SAMPLE_ATTEMPTS = 100

ARTIFACT_BLOB = "blob"
ARTIFACT_HOLE = "hole"


@dataclass(frozen=True)
class Artifact:
    center: tuple
    semiaxes: tuple
    kind: str


@dataclass(frozen=True)
class HeadGeometry:
    """One sampled head: all lengths in voxel units."""

    outer_center: tuple
    outer_semiaxes: tuple
    shell_thickness: float
    brain_center: tuple
    brain_semiaxes: tuple
    artifacts: tuple = ()

    @property
    def cavity_semiaxes(self):
        return tuple(a - self.shell_thickness for a in self.outer_semiaxes)


@dataclass(frozen=True)
class ShapeMasks:
    """Rasterized shape masks for one sample (before or after deformation)."""

    shell: MaskVolume
    brain: MaskVolume
    artifacts: tuple = ()  # (MaskVolume, kind) pairs


def rasterize_ellipsoid(dims, center, semiaxes):
    """Mask of voxels v with sum_i ((v_i - c_i) / a_i)^2 <= 1 (inclusive)."""
    dims = tuple(int(d) for d in dims)
    center = tuple(float(c) for c in center)
    semiaxes = tuple(float(a) for a in semiaxes)
    if len(center) != 3 or len(semiaxes) != 3:
        raise ValueError("center and semiaxes must be 3-vectors")
    if any(a <= 0 for a in semiaxes):
        raise ValueError(f"semiaxes must be positive, got {semiaxes}")

    out = np.zeros(dims, dtype=bool)
    lo = [max(0, int(np.ceil(c - a))) for c, a in zip(center, semiaxes)]
    hi = [min(n - 1, int(np.floor(c + a))) for n, c, a in zip(dims, center, semiaxes)]
    if any(l > h for l, h in zip(lo, hi)):
        return MaskVolume(out)

    # Separable squared terms keep the bounding-box evaluation cheap.
    q = [
        ((np.arange(l, h + 1, dtype=np.float64) - c) / a) ** 2
        for l, h, c, a in zip(lo, hi, center, semiaxes)
    ]
    inside = q[0][:, None, None] + q[1][None, :, None] + q[2][None, None, :] <= 1.0
    out[lo[0]:hi[0] + 1, lo[1]:hi[1] + 1, lo[2]:hi[2] + 1] = inside
    return MaskVolume(out)


def _fits_in_grid(dims, center, semiaxes):
    return all(
        c - a >= 0 and c + a <= n - 1 for n, c, a in zip(dims, center, semiaxes)
    )


def _voxel_extents(center, semiaxes):
    """Bounding-box size per axis of the rasterized ellipsoid.

    Same separable evaluation as rasterize_ellipsoid, restricted to the
    bounding box, so the counts match the full-grid mask exactly as long
    as the ellipsoid fits inside the grid.
    """
    lo = [int(np.ceil(c - a)) for c, a in zip(center, semiaxes)]
    hi = [int(np.floor(c + a)) for c, a in zip(center, semiaxes)]
    if any(l > h for l, h in zip(lo, hi)):
        return (0, 0, 0)
    q = [
        ((np.arange(l, h + 1, dtype=np.float64) - c) / a) ** 2
        for l, h, c, a in zip(lo, hi, center, semiaxes)
    ]
    inside = q[0][:, None, None] + q[1][None, :, None] + q[2][None, None, :] <= 1.0
    if not inside.any():
        return (0, 0, 0)
    extents = []
    for axis, other in enumerate(((1, 2), (0, 2), (0, 1))):
        nz = np.flatnonzero(inside.any(axis=other))
        extents.append(int(nz[-1] - nz[0]) + 1)
    return tuple(extents)


def sample_head_geometry(rng, cfg):
    """Draw one feasible HeadGeometry from the config's ranges.

    Rejection-samples until all containment constraints hold and the
    brain mask's z extent does not exceed its x/y extents on the voxel
    grid; a config whose ranges cannot produce a feasible geometry
    within MAX_SAMPLE_ATTEMPTS draws fails loudly.
    """
    cfg.validate()
    shape = cfg.shape
    dims = tuple(int(d) for d in cfg.dims)
    gen = rng.generator()
    outer_center = tuple((n - 1) / 2.0 for n in dims)
    margin = float(shape.containment_margin)

    for _ in range(MAX_SAMPLE_ATTEMPTS):
        outer_ax = gen.uniform(*shape.outer_semiaxes_range, size=3)
        thickness = float(gen.uniform(*shape.shell_thickness_range))
        cavity = outer_ax - thickness
        frac = gen.uniform(*shape.brain_fraction_range, size=3)
        z_scale = float(gen.uniform(*shape.brain_z_scale_range))
        brain_ax = frac * cavity
        brain_ax[2] *= z_scale
        j = shape.center_jitter_fraction
        offset = gen.uniform(-j, j, size=3) * cavity

        if np.any(cavity <= margin):
            continue
        if not (brain_ax[2] < brain_ax[0] and brain_ax[2] < brain_ax[1]):
            continue
        # strict containment with a safety margin, per axis
        if np.any(brain_ax + np.abs(offset) >= cavity - margin):
            continue
        if not _fits_in_grid(dims, outer_center, outer_ax):
            continue
        # The semi-axis inequality alone does not survive voxelization:
        # an unlucky fractional center can still give the (analytically
        # flatter) z axis the widest bounding box, so check the grid.
        brain_center = tuple(c + o for c, o in zip(outer_center, offset))
        ext = _voxel_extents(brain_center, tuple(map(float, brain_ax)))
        if ext[2] > ext[0] or ext[2] > ext[1]:
            continue

        count_lo, count_hi = shape.artifact_count_range
        count = int(gen.integers(count_lo, count_hi + 1))
        artifacts = []
        for _ in range(count):
            kind = ARTIFACT_BLOB if gen.random() < 0.5 else ARTIFACT_HOLE
            center = gen.uniform(
                np.asarray(outer_center) - outer_ax,
                np.asarray(outer_center) + outer_ax,
            )
            ax = gen.uniform(*shape.artifact_semiaxes_range, size=3)
            artifacts.append(
                Artifact(tuple(map(float, center)), tuple(map(float, ax)), kind)
            )

        return HeadGeometry(
            outer_center=outer_center,
            outer_semiaxes=tuple(map(float, outer_ax)),
            shell_thickness=thickness,
            brain_center=brain_center,
            brain_semiaxes=tuple(map(float, brain_ax)),
            artifacts=tuple(artifacts),
        )

    raise ConfigError(
        f"no feasible head geometry in {MAX_SAMPLE_ATTEMPTS} attempts; "
        "the configured ranges leave no room for brain-inside-cavity containment"
    )


def build_masks(geom, dims):
    """Rasterize a geometry: hollow shell, brain, and artifact masks.

    Hole artifacts never pierce the brain: their masks exclude brain
    voxels so the label target stays consistent with the image.
    """
    dims = tuple(int(d) for d in dims)
    for name, center, ax in (
        ("outer ellipsoid", geom.outer_center, geom.outer_semiaxes),
        ("brain ellipsoid", geom.brain_center, geom.brain_semiaxes),
    ):
        if not _fits_in_grid(dims, center, ax):
            raise OutOfBoundsError(f"{name} does not fit inside dims {dims}")

    outer = rasterize_ellipsoid(dims, geom.outer_center, geom.outer_semiaxes)
    cavity = rasterize_ellipsoid(dims, geom.outer_center, geom.cavity_semiaxes)
    brain = rasterize_ellipsoid(dims, geom.brain_center, geom.brain_semiaxes)
    shell = MaskVolume(outer.data & ~cavity.data)

    artifacts = []
    for art in geom.artifacts:
        mask = rasterize_ellipsoid(dims, art.center, art.semiaxes)
        if art.kind == ARTIFACT_HOLE:
            mask = MaskVolume(mask.data & ~brain.data)
        artifacts.append((mask, art.kind))

    return ShapeMasks(shell=shell, brain=brain, artifacts=tuple(artifacts))
