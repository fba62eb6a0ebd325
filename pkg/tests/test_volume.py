"""Core volume types, grid transforms and RNG stream behavior."""

import numpy as np
import pytest

from synthhead.volume import (
    LabelVolume,
    MaskVolume,
    RngStream,
    ScalarVolume,
    flip,
    new_volume,
    resample,
    rotate90,
    sample_stream,
    translate,
)


def random_scalar(seed, dims=(9, 7, 5)):
    rng = np.random.default_rng(seed)
    return ScalarVolume(rng.random(dims, dtype=np.float32))


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


def test_new_volume_fill_and_dtype():
    vol = new_volume((4, 5, 6), fill=0.25)
    assert vol.dims == (4, 5, 6)
    assert vol.data.dtype == np.float32
    assert np.all(vol.data == np.float32(0.25))


def test_volume_arrays_are_immutable():
    vol = new_volume((3, 3, 3))
    with pytest.raises(ValueError):
        vol.data[0, 0, 0] = 1.0
    mask = MaskVolume(np.zeros((3, 3, 3), dtype=bool))
    with pytest.raises(ValueError):
        mask.data[0, 0, 0] = True


def test_label_volume_rejects_out_of_range_values():
    with pytest.raises(ValueError):
        LabelVolume(np.full((2, 2, 2), 3, dtype=np.uint8))


def test_invalid_dims_rejected():
    with pytest.raises(ValueError):
        new_volume((0, 4, 4))
    with pytest.raises(ValueError):
        ScalarVolume(np.zeros((4, 4), dtype=np.float32))


def test_spacing_quantized_to_float32():
    vol = ScalarVolume(np.zeros((2, 2, 2), dtype=np.float32), spacing=(0.1, 0.2, 0.3))
    for got, want in zip(vol.spacing, (0.1, 0.2, 0.3)):
        assert got == float(np.float32(want))


def test_default_affine_is_diagonal_spacing():
    vol = ScalarVolume(np.zeros((2, 2, 2), dtype=np.float32), spacing=(1.0, 2.0, 4.0))
    expect = np.diag([1.0, 2.0, 4.0, 1.0]).astype(np.float32)
    assert np.array_equal(vol.affine, expect)


# ---------------------------------------------------------------------------
# Flip / rotate / translate
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("axis", ["x", "y", "z"])
@pytest.mark.parametrize("seed", range(5))
def test_flip_is_involution(axis, seed):
    vol = random_scalar(seed)
    twice = flip(flip(vol, axis), axis)
    assert np.array_equal(twice.data, vol.data)


def test_flip_reverses_the_right_axis():
    data = np.arange(24, dtype=np.float32).reshape(2, 3, 4)
    vol = ScalarVolume(data)
    assert np.array_equal(flip(vol, "x").data, data[::-1, :, :])
    assert np.array_equal(flip(vol, "y").data, data[:, ::-1, :])
    assert np.array_equal(flip(vol, "z").data, data[:, :, ::-1])


@pytest.mark.parametrize("axis", ["x", "y", "z"])
@pytest.mark.parametrize("seed", range(5))
def test_four_quarter_turns_are_identity(axis, seed):
    # In-plane dims must match for k=1 to keep the shape; use a cube.
    vol = random_scalar(seed, dims=(6, 6, 6))
    out = vol
    for _ in range(4):
        out = rotate90(out, axis)
    assert np.array_equal(out.data, vol.data)
    assert np.array_equal(rotate90(vol, axis, quarter_turns=4).data, vol.data)


def test_rotate90_z_moves_single_voxel():
    # One quarter turn about z maps (x, y) -> (y, nx-1-x) under np.rot90
    # on axes (0, 1); verify against the library's own semantics.
    data = np.zeros((4, 4, 1), dtype=np.float32)
    data[1, 0, 0] = 1.0
    vol = ScalarVolume(data)
    out = rotate90(vol, "z")
    expect = np.rot90(data, k=1, axes=(0, 1))
    assert np.array_equal(out.data, expect)
    assert out.data.sum() == 1.0


@pytest.mark.parametrize("seed", range(8))
def test_translate_matches_index_oracle(seed):
    rng = np.random.default_rng(seed)
    dims = (7, 6, 5)
    vol = ScalarVolume(rng.random(dims, dtype=np.float32))
    off = tuple(int(o) for o in rng.integers(-3, 4, size=3))
    out = translate(vol, off, pad_value=0.0)

    # Oracle: voxel-by-voxel shift with explicit bounds checks.
    expect = np.zeros(dims, dtype=np.float32)
    for i in range(dims[0]):
        for j in range(dims[1]):
            for k in range(dims[2]):
                si, sj, sk = i - off[0], j - off[1], k - off[2]
                if 0 <= si < dims[0] and 0 <= sj < dims[1] and 0 <= sk < dims[2]:
                    expect[i, j, k] = vol.data[si, sj, sk]
    assert np.array_equal(out.data, expect)


def test_translate_zero_offset_is_identity():
    vol = random_scalar(0)
    assert np.array_equal(translate(vol, (0, 0, 0)).data, vol.data)


def test_translate_pads_labels_with_background():
    labels = LabelVolume(np.ones((4, 4, 4), dtype=np.uint8))
    out = translate(labels, (2, 0, 0), pad_value=0)
    assert out.data.dtype == np.uint8
    assert np.all(out.data[:2] == 0)
    assert np.all(out.data[2:] == 1)


def test_translate_past_edge_clears_volume():
    vol = new_volume((3, 3, 3), fill=1.0)
    out = translate(vol, (5, 0, 0))
    assert np.all(out.data == 0.0)


# ---------------------------------------------------------------------------
# Resample
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("mode", ["trilinear", "nearest"])
def test_resample_identity_when_dims_match(mode):
    vol = random_scalar(3)
    out = resample(vol, vol.dims, mode=mode)
    assert np.array_equal(out.data, vol.data)
    assert out.spacing == vol.spacing


@pytest.mark.parametrize("dims", [(4, 4, 4), (9, 5, 7), (2, 12, 3)])
def test_resample_constant_stays_constant(dims):
    vol = new_volume((8, 8, 8), fill=0.7)
    out = resample(vol, dims)
    assert out.dims == dims
    assert np.allclose(out.data, 0.7, atol=1e-6)


def test_resample_nearest_preserves_value_set():
    rng = np.random.default_rng(11)
    labels = LabelVolume(rng.integers(0, 3, size=(10, 10, 10)).astype(np.uint8))
    out = resample(labels, (7, 13, 4), mode="nearest")
    assert set(np.unique(out.data)) <= set(np.unique(labels.data))
    assert out.data.dtype == np.uint8


def test_resample_trilinear_rejects_categorical():
    labels = LabelVolume(np.zeros((4, 4, 4), dtype=np.uint8))
    with pytest.raises(ValueError):
        resample(labels, (8, 8, 8))
    mask = MaskVolume(np.zeros((4, 4, 4), dtype=bool))
    with pytest.raises(ValueError):
        resample(mask, (8, 8, 8))


def test_resample_linear_ramp_is_exact():
    # A linear function is reproduced exactly by trilinear interpolation.
    x = np.arange(9, dtype=np.float32)
    data = np.broadcast_to(x[:, None, None], (9, 4, 4)).copy()
    out = resample(ScalarVolume(data), (17, 4, 4))
    expect = np.broadcast_to(
        (np.arange(17, dtype=np.float32) * 0.5)[:, None, None], (17, 4, 4)
    )
    assert np.allclose(out.data, expect, atol=1e-6)


def test_resample_corners_map_to_corners():
    vol = random_scalar(5, dims=(6, 7, 8))
    out = resample(vol, (11, 13, 15))
    assert out.data[0, 0, 0] == pytest.approx(vol.data[0, 0, 0], abs=1e-6)
    assert out.data[-1, -1, -1] == pytest.approx(vol.data[-1, -1, -1], abs=1e-6)


def test_resample_spacing_preserves_extent():
    vol = ScalarVolume(np.zeros((9, 9, 9), dtype=np.float32), spacing=(2.0, 2.0, 2.0))
    out = resample(vol, (17, 17, 17))
    # Extent between first and last voxel centers: 8 * 2.0 = 16 * 1.0.
    assert out.spacing == (1.0, 1.0, 1.0)


# ---------------------------------------------------------------------------
# RNG streams
# ---------------------------------------------------------------------------


def test_same_stream_replays_identically():
    a = RngStream(123, 7).generator().random(100)
    b = RngStream(123, 7).generator().random(100)
    assert np.array_equal(a, b)


def test_distinct_streams_differ():
    a = RngStream(123, 7).generator().random(100)
    b = RngStream(123, 8).generator().random(100)
    c = RngStream(124, 7).generator().random(100)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_child_streams_are_stable_and_distinct():
    root = RngStream(99, 0)
    tags = list(range(16))
    ids = [root.child(t).stream_id for t in tags]
    assert len(set(ids)) == len(ids)
    again = [root.child(t).stream_id for t in tags]
    assert ids == again


def test_child_chains_do_not_collide():
    root = RngStream(5)
    seen = set()
    for a in range(8):
        for b in range(8):
            seen.add(root.child(a).child(b).stream_id)
    assert len(seen) == 64


def test_sample_stream_namespaces():
    offline = sample_stream(42, 3)
    assert offline == RngStream(42, 3)
    conn = sample_stream(42, 3, connection=2)
    assert conn.stream_id == (2 << 32) | 3
    assert conn != offline


def test_sample_stream_rejects_out_of_range():
    with pytest.raises(ValueError):
        sample_stream(1, 1 << 32)
    with pytest.raises(ValueError):
        sample_stream(1, 0, connection=1 << 32)


def test_generator_draws_are_dtype_stable():
    gen = RngStream(7, 1).generator()
    x = gen.standard_normal(10, dtype=np.float32)
    assert x.dtype == np.float32
