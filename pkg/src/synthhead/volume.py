"""Volumetric value types, grid transforms and the seeded RNG contract.

Conventions fixed project-wide:

* arrays are C-contiguous with shape ``(nx, ny, nz)``; axis 0 is x;
* voxel centers sit at integer coordinates ``0 .. n-1`` along each axis;
* images are float32, masks are bool, label grids are uint8;
* spacing and affine are kept at float32 precision so that a volume
  written to disk and read back compares bit-exact.

Volumes are immutable: the backing arrays are marked read-only at
construction and every operation returns a new volume.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

AXES = {"x": 0, "y": 1, "z": 2}

LABEL_BACKGROUND = 0
LABEL_BRAIN = 1
LABEL_BOUNDARY = 2


def _as_dims(dims):
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or any(d < 1 for d in dims):
        raise ValueError(f"dims must be three positive voxel counts, got {dims}")
    return dims


def _freeze(arr):
    arr.setflags(write=False)
    return arr


def _f32_tuple(values):
    return tuple(float(np.float32(v)) for v in values)


def default_affine(spacing):
    aff = np.zeros((4, 4), dtype=np.float32)
    aff[0, 0], aff[1, 1], aff[2, 2] = spacing
    aff[3, 3] = 1.0
    return aff


def _prepare_affine(affine, spacing):
    if affine is None:
        affine = default_affine(spacing)
    affine = np.ascontiguousarray(affine, dtype=np.float32)
    if affine.shape != (4, 4):
        raise ValueError(f"affine must be 4x4, got shape {affine.shape}")
    return _freeze(affine)


def _prepare_spacing(spacing):
    spacing = _f32_tuple(spacing)
    if len(spacing) != 3 or any(s <= 0 for s in spacing):
        raise ValueError(f"spacing must be three positive values, got {spacing}")
    return spacing


@dataclass(frozen=True, eq=False)
class ScalarVolume:
    """3D grid of real-valued intensities with spacing and affine metadata."""

    data: np.ndarray
    spacing: tuple = (1.0, 1.0, 1.0)
    affine: np.ndarray | None = None

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float32)
        if data.ndim != 3:
            raise ValueError(f"expected a 3D array, got ndim={data.ndim}")
        _as_dims(data.shape)
        spacing = _prepare_spacing(self.spacing)
        object.__setattr__(self, "data", _freeze(data))
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "affine", _prepare_affine(self.affine, spacing))

    @property
    def dims(self):
        return self.data.shape


@dataclass(frozen=True, eq=False)
class MaskVolume:
    """3D binary mask; one bit per voxel."""

    data: np.ndarray
    spacing: tuple = (1.0, 1.0, 1.0)
    affine: np.ndarray | None = None

    def __post_init__(self):
        data = np.ascontiguousarray(self.data)
        if data.dtype != np.bool_:
            data = data.astype(bool)
        if data.ndim != 3:
            raise ValueError(f"expected a 3D array, got ndim={data.ndim}")
        _as_dims(data.shape)
        spacing = _prepare_spacing(self.spacing)
        object.__setattr__(self, "data", _freeze(data))
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "affine", _prepare_affine(self.affine, spacing))

    @property
    def dims(self):
        return self.data.shape

    def count(self):
        return int(np.count_nonzero(self.data))


@dataclass(frozen=True, eq=False)
class LabelVolume:
    """3D categorical grid over {0 background, 1 brain, 2 boundary}."""

    data: np.ndarray
    spacing: tuple = (1.0, 1.0, 1.0)
    affine: np.ndarray | None = None

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.uint8)
        if data.ndim != 3:
            raise ValueError(f"expected a 3D array, got ndim={data.ndim}")
        _as_dims(data.shape)
        if data.size and int(data.max()) > LABEL_BOUNDARY:
            raise ValueError("label values must lie in {0, 1, 2}")
        spacing = _prepare_spacing(self.spacing)
        object.__setattr__(self, "data", _freeze(data))
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "affine", _prepare_affine(self.affine, spacing))

    @property
    def dims(self):
        return self.data.shape


Volume = ScalarVolume | MaskVolume | LabelVolume


def new_volume(dims, fill=0.0, spacing=(1.0, 1.0, 1.0)):
    """Create a ScalarVolume of ``dims`` with every voxel equal to ``fill``."""
    dims = _as_dims(dims)
    return ScalarVolume(np.full(dims, fill, dtype=np.float32), spacing=spacing)


# ---------------------------------------------------------------------------
# Seeded RNG contract
# ---------------------------------------------------------------------------

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(x):
    x = (x + _GOLDEN) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


@dataclass(frozen=True)
class RngStream:
    """Handle to one deterministic random stream.

    Identical ``(seed, stream_id)`` pairs replay the identical draw
    sequence, backed by the counter-based Philox generator so arbitrarily
    many independent sub-streams can be derived without coordination.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)
        object.__setattr__(self, "stream_id", int(self.stream_id) & _MASK64)

    def child(self, tag):
        """Derive the sub-stream for integer ``tag``; stable and collision-safe."""
        return RngStream(self.seed, _splitmix64(self.stream_id ^ ((int(tag) * _GOLDEN) & _MASK64)))

    def generator(self):
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


def sample_stream(seed, index, connection=0):
    """Stream for sample ``index``.

    ``connection`` 0 is the offline-generation namespace and also the
    first live-stream connection, so a single-client stream replays the
    on-disk dataset; later connections use their own counter value and
    get independent deterministic sequences.
    """
    index = int(index)
    connection = int(connection)
    if not 0 <= index < (1 << 32):
        raise ValueError("sample index must fit in 32 bits")
    if not 0 <= connection < (1 << 32):
        raise ValueError("connection counter must fit in 32 bits")
    return RngStream(seed, (connection << 32) | index)


# ---------------------------------------------------------------------------
# Grid transforms
# ---------------------------------------------------------------------------


def _rebuild(vol, data, **overrides):
    return dataclasses.replace(vol, data=data, **overrides)


def flip(vol, axis):
    """Mirror the volume along one axis."""
    if axis not in AXES:
        raise ValueError(f"axis must be one of {sorted(AXES)}, got {axis!r}")
    return _rebuild(vol, np.flip(vol.data, axis=AXES[axis]).copy())


_ROT_PLANES = {"x": (1, 2), "y": (2, 0), "z": (0, 1)}


def rotate90(vol, axis, quarter_turns=1):
    """Rotate by quarter turns about ``axis`` (right-handed, in-plane)."""
    if axis not in AXES:
        raise ValueError(f"axis must be one of {sorted(AXES)}, got {axis!r}")
    k = int(quarter_turns) % 4
    if k == 0:
        return _rebuild(vol, vol.data.copy())
    return _rebuild(vol, np.rot90(vol.data, k=k, axes=_ROT_PLANES[axis]).copy())


def translate(vol, offset, pad_value=0):
    """Shift voxel content by an integer offset, padding vacated voxels."""
    offset = tuple(int(o) for o in offset)
    if len(offset) != 3:
        raise ValueError("offset must be a 3-vector of integers")
    data = vol.data
    out = np.full_like(data, pad_value)
    src = []
    dst = []
    for ax, off in enumerate(offset):
        n = data.shape[ax]
        if abs(off) >= n:
            return _rebuild(vol, out)
        src.append(slice(max(0, -off), min(n, n - off)))
        dst.append(slice(max(0, off), min(n, n + off)))
    out[tuple(dst)] = data[tuple(src)]
    return _rebuild(vol, out)


def _axis_positions(n_in, n_out):
    # Corner-to-corner mapping: first/last voxel centers coincide.
    if n_out == 1:
        return np.zeros(1, dtype=np.float64)
    scale = (n_in - 1) / (n_out - 1)
    return np.arange(n_out, dtype=np.float64) * scale


def _resampled_spacing(vol, target_dims):
    out = []
    for s, n_in, n_out in zip(vol.spacing, vol.dims, target_dims):
        if n_out == 1:
            out.append(s * n_in)
        else:
            out.append(s * (n_in - 1) / (n_out - 1))
    return _f32_tuple(out)


def _interp_axis_linear(data, positions, axis):
    """Linear interpolation along one axis at fractional ``positions``."""
    i0 = np.floor(positions).astype(np.intp)
    i0 = np.clip(i0, 0, data.shape[axis] - 1)
    i1 = np.minimum(i0 + 1, data.shape[axis] - 1)
    frac = (positions - i0).astype(data.dtype)
    shape = [1] * data.ndim
    shape[axis] = len(positions)
    frac = frac.reshape(shape)
    lo = np.take(data, i0, axis=axis)
    hi = np.take(data, i1, axis=axis)
    return lo * (1 - frac) + hi * frac


def resample(vol, target_dims, mode="trilinear"):
    """Resample to ``target_dims``; trilinear for images, nearest for categorical grids.

    Output grid positions map corner-to-corner onto the input grid and the
    spacing is rescaled so the physical extent is preserved.
    """
    target_dims = _as_dims(target_dims)
    if mode not in ("trilinear", "nearest"):
        raise ValueError(f"mode must be 'trilinear' or 'nearest', got {mode!r}")
    if mode == "trilinear" and not isinstance(vol, ScalarVolume):
        raise ValueError("trilinear resampling is only valid for ScalarVolume")

    positions = [_axis_positions(n_in, n_out) for n_in, n_out in zip(vol.dims, target_dims)]
    if mode == "nearest":
        idx = [np.clip(np.floor(p + 0.5).astype(np.intp), 0, n - 1)
               for p, n in zip(positions, vol.dims)]
        data = vol.data[np.ix_(idx[0], idx[1], idx[2])]
    else:
        data = vol.data.astype(np.float64)
        for axis in range(3):
            data = _interp_axis_linear(data, positions[axis], axis)
        data = data.astype(np.float32)
    return _rebuild(vol, data, spacing=_resampled_spacing(vol, target_dims))
