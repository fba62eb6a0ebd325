"""Ellipsoid rasterization and head geometry sampling."""

import numpy as np
import pytest

from synthhead.config import GeneratorConfig, ShapeConfig
from synthhead.errors import ConfigError, OutOfBoundsError
from synthhead.shapes import (
    HeadGeometry,
    build_masks,
    rasterize_ellipsoid,
    sample_head_geometry,
)
from synthhead.volume import RngStream


def brute_force_ellipsoid(dims, center, semiaxes):
    out = np.zeros(dims, dtype=bool)
    for i in range(dims[0]):
        for j in range(dims[1]):
            for k in range(dims[2]):
                q = (
                    ((i - center[0]) / semiaxes[0]) ** 2
                    + ((j - center[1]) / semiaxes[1]) ** 2
                    + ((k - center[2]) / semiaxes[2]) ** 2
                )
                out[i, j, k] = q <= 1.0
    return out


# ---------------------------------------------------------------------------
# rasterize_ellipsoid
# ---------------------------------------------------------------------------


def test_unit_sphere_is_center_plus_face_neighbors():
    mask = rasterize_ellipsoid((7, 7, 7), (3, 3, 3), (1, 1, 1))
    # Enumerate: only the center and its 6 face neighbors satisfy the
    # inclusive inequality for unit semiaxes at an integer center.
    expect = np.zeros((7, 7, 7), dtype=bool)
    for di, dj, dk in [(0, 0, 0), (1, 0, 0), (-1, 0, 0), (0, 1, 0),
                       (0, -1, 0), (0, 0, 1), (0, 0, -1)]:
        expect[3 + di, 3 + dj, 3 + dk] = True
    assert np.array_equal(mask.data, expect)
    assert mask.count() == 7


@pytest.mark.parametrize("seed", range(10))
def test_rasterization_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    dims = (12, 11, 10)
    center = tuple(rng.uniform(2, 9, size=3))
    semiaxes = tuple(rng.uniform(0.5, 4.5, size=3))
    mask = rasterize_ellipsoid(dims, center, semiaxes)
    assert np.array_equal(mask.data, brute_force_ellipsoid(dims, center, semiaxes))


def test_sphere_volume_close_to_analytic():
    mask = rasterize_ellipsoid((64, 64, 64), (31.5, 31.5, 31.5), (10, 10, 10))
    analytic = 4.0 / 3.0 * np.pi * 1000.0
    assert abs(mask.count() - analytic) / analytic < 0.05


@pytest.mark.parametrize("seed", range(20))
def test_ellipsoid_volume_close_to_analytic(seed):
    rng = np.random.default_rng(100 + seed)
    semiaxes = rng.uniform(10, 24, size=3)
    dims = (64, 64, 64)
    mask = rasterize_ellipsoid(dims, (31.5, 31.5, 31.5), semiaxes)
    analytic = 4.0 / 3.0 * np.pi * float(np.prod(semiaxes))
    assert abs(mask.count() - analytic) / analytic < 0.05


def test_degenerate_semiaxis_rejected():
    with pytest.raises(ValueError):
        rasterize_ellipsoid((16, 16, 16), (8, 8, 8), (10, 10, 0))
    with pytest.raises(ValueError):
        rasterize_ellipsoid((16, 16, 16), (8, 8, 8), (-1, 2, 2))


def test_ellipsoid_fully_outside_grid_is_empty():
    mask = rasterize_ellipsoid((8, 8, 8), (100, 100, 100), (3, 3, 3))
    assert mask.count() == 0


def test_ellipsoid_clips_at_grid_border():
    mask = rasterize_ellipsoid((8, 16, 16), (0, 8, 8), (4, 4, 4))
    full = rasterize_ellipsoid((17, 16, 16), (8, 8, 8), (4, 4, 4))
    assert np.array_equal(mask.data, full.data[8:16])


# ---------------------------------------------------------------------------
# sample_head_geometry
# ---------------------------------------------------------------------------


def test_fixed_seed_gives_identical_geometry():
    cfg = GeneratorConfig()
    a = sample_head_geometry(RngStream(42), cfg)
    b = sample_head_geometry(RngStream(42), cfg)
    assert a == b


def test_different_seeds_give_different_geometry():
    cfg = GeneratorConfig()
    a = sample_head_geometry(RngStream(1), cfg)
    b = sample_head_geometry(RngStream(2), cfg)
    assert a != b


@pytest.mark.parametrize("seed", range(100))
def test_geometry_invariants_hold(seed):
    cfg = GeneratorConfig()
    g = sample_head_geometry(RngStream(seed), cfg)
    cavity = g.cavity_semiaxes
    assert all(c > 0 for c in cavity)
    # brain strictly inside the cavity, axis by axis
    for b, c, bc, oc in zip(g.brain_semiaxes, cavity, g.brain_center, g.outer_center):
        assert b + abs(bc - oc) < c
    # z semi-axis strictly the shortest
    assert g.brain_semiaxes[2] < min(g.brain_semiaxes[0], g.brain_semiaxes[1])
    # sampled values inside their configured ranges
    for a in g.outer_semiaxes:
        assert 38.0 <= a <= 56.0
    assert 4.0 <= g.shell_thickness <= 10.0
    lo, hi = cfg.shape.artifact_count_range
    assert lo <= len(g.artifacts) <= hi
    for art in g.artifacts:
        assert art.kind in ("blob", "hole")
        for ax in art.semiaxes:
            assert 2.0 <= ax <= 8.0


def test_infeasible_brain_fraction_raises_config_error():
    cfg = GeneratorConfig(
        shape=ShapeConfig(brain_fraction_range=(1.1, 1.3), brain_z_scale_range=(1.0, 1.0))
    )
    with pytest.raises(ConfigError):
        sample_head_geometry(RngStream(0), cfg)


def test_oversized_outer_axes_raise_config_error():
    cfg = GeneratorConfig(
        dims=(48, 48, 48),
        shape=ShapeConfig(outer_semiaxes_range=(38.0, 56.0)),
    )
    with pytest.raises(ConfigError):
        sample_head_geometry(RngStream(0), cfg)


# ---------------------------------------------------------------------------
# build_masks
# ---------------------------------------------------------------------------


def test_shell_count_close_to_analytic_difference():
    g = HeadGeometry(
        outer_center=(31.5, 31.5, 31.5),
        outer_semiaxes=(24.0, 22.0, 20.0),
        shell_thickness=6.0,
        brain_center=(31.5, 31.5, 31.5),
        brain_semiaxes=(10.0, 10.0, 8.0),
    )
    masks = build_masks(g, (64, 64, 64))
    outer_v = 4 / 3 * np.pi * 24 * 22 * 20
    cavity_v = 4 / 3 * np.pi * 18 * 16 * 14
    expect = outer_v - cavity_v
    assert abs(masks.shell.count() - expect) / expect < 0.05


@pytest.mark.parametrize("seed", range(0, 100, 7))
def test_shell_and_brain_are_disjoint_voxelwise(seed):
    cfg = GeneratorConfig()
    g = sample_head_geometry(RngStream(seed), cfg)
    masks = build_masks(g, cfg.dims)
    assert not np.any(masks.shell.data & masks.brain.data)
    assert masks.brain.count() > 0
    assert masks.shell.count() > 0


def test_brain_z_extent_is_smallest():
    cfg = GeneratorConfig()
    for seed in range(0, 40, 5):
        g = sample_head_geometry(RngStream(seed), cfg)
        masks = build_masks(g, cfg.dims)
        idx = np.nonzero(masks.brain.data)
        extents = [int(a.max() - a.min()) + 1 for a in idx]
        assert extents[2] <= extents[0]
        assert extents[2] <= extents[1]


def test_zero_artifacts_gives_empty_list():
    cfg = GeneratorConfig(shape=ShapeConfig(artifact_count_range=(0, 0)))
    g = sample_head_geometry(RngStream(3), cfg)
    assert g.artifacts == ()
    masks = build_masks(g, cfg.dims)
    assert masks.artifacts == ()


def test_hole_artifacts_never_pierce_brain():
    cfg = GeneratorConfig(shape=ShapeConfig(artifact_count_range=(4, 4)))
    found_hole = False
    for seed in range(30):
        g = sample_head_geometry(RngStream(seed), cfg)
        masks = build_masks(g, cfg.dims)
        for mask, kind in masks.artifacts:
            if kind == "hole":
                found_hole = True
                assert not np.any(mask.data & masks.brain.data)
    assert found_hole


def test_geometry_exceeding_dims_rejected():
    g = HeadGeometry(
        outer_center=(16.0, 16.0, 16.0),
        outer_semiaxes=(20.0, 10.0, 10.0),
        shell_thickness=3.0,
        brain_center=(16.0, 16.0, 16.0),
        brain_semiaxes=(5.0, 5.0, 4.0),
    )
    with pytest.raises(OutOfBoundsError):
        build_masks(g, (32, 32, 32))
