"""Single-file NIfTI-1 reader/writer (plain and gzip-compressed).

Only the two datatypes this project exchanges are supported: float32
(code 16) for images and probability maps, uint8 (code 2) for labels and
masks. Files are written little-endian with the data at offset 352
(348-byte header plus a 4-byte zero extender), payload in Fortran index
order as the format prescribes. Both byte orders are accepted on read.

The affine is passed through untouched: srow_x/y/z when sform_code > 0,
otherwise a diagonal built from pixdim. No reorientation is performed;
volumes live in voxel space by project convention.
"""

from __future__ import annotations

import gzip
import os
import struct

import numpy as np

from synthhead.errors import FormatError
from synthhead.volume import LabelVolume, MaskVolume, ScalarVolume

HEADER_SIZE = 348
DATA_OFFSET = 352
MAGIC = b"n+1\x00"

DT_UINT8 = 2
DT_FLOAT32 = 16

_OFF_SIZEOF_HDR = 0
_OFF_DIM = 40
_OFF_DATATYPE = 70
_OFF_BITPIX = 72
_OFF_PIXDIM = 76
_OFF_VOX_OFFSET = 108
_OFF_SCL_SLOPE = 112
_OFF_SCL_INTER = 116
_OFF_XYZT_UNITS = 123
_OFF_QFORM_CODE = 252
_OFF_SFORM_CODE = 254
_OFF_SROW_X = 280
_OFF_SROW_Y = 296
_OFF_SROW_Z = 312
_OFF_MAGIC = 344

_GZIP_MAGIC = b"\x1f\x8b"


def _open_for_read(path):
    f = open(path, "rb")
    head = f.read(2)
    f.seek(0)
    if head == _GZIP_MAGIC:
        return gzip.GzipFile(fileobj=f, mode="rb")
    return f


def _unpack(fmt, raw, offset):
    return struct.unpack_from(fmt, raw, offset)


def _parse_header(raw):
    """Decode the fields this project uses; returns a plain dict."""
    if len(raw) < HEADER_SIZE:
        raise FormatError(
            f"file too short for a NIfTI-1 header ({len(raw)} bytes)", offset=len(raw)
        )
    (sizeof_hdr_le,) = _unpack("<i", raw, _OFF_SIZEOF_HDR)
    if sizeof_hdr_le == HEADER_SIZE:
        endian = "<"
    else:
        (sizeof_hdr_be,) = _unpack(">i", raw, _OFF_SIZEOF_HDR)
        if sizeof_hdr_be != HEADER_SIZE:
            raise FormatError(
                f"sizeof_hdr is {sizeof_hdr_le}, expected 348 in either byte order",
                offset=_OFF_SIZEOF_HDR,
            )
        endian = ">"

    magic = raw[_OFF_MAGIC:_OFF_MAGIC + 4]
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}", offset=_OFF_MAGIC)

    dim = _unpack(endian + "8h", raw, _OFF_DIM)
    ndim = dim[0]
    if not 1 <= ndim <= 7:
        raise FormatError(f"dim[0] is {ndim}, expected 1..7", offset=_OFF_DIM)
    shape = tuple(int(d) for d in dim[1:1 + ndim])
    if any(d < 1 for d in shape):
        raise FormatError(f"non-positive extent in dim {shape}", offset=_OFF_DIM)

    (datatype,) = _unpack(endian + "h", raw, _OFF_DATATYPE)
    if datatype not in (DT_UINT8, DT_FLOAT32):
        raise FormatError(
            f"unsupported datatype code {datatype} (supported: 2 uint8, 16 float32)",
            offset=_OFF_DATATYPE,
        )

    pixdim = _unpack(endian + "8f", raw, _OFF_PIXDIM)
    (vox_offset,) = _unpack(endian + "f", raw, _OFF_VOX_OFFSET)
    if not vox_offset >= HEADER_SIZE:
        raise FormatError(
            f"vox_offset {vox_offset} is inside the header", offset=_OFF_VOX_OFFSET
        )
    (scl_slope,) = _unpack(endian + "f", raw, _OFF_SCL_SLOPE)
    (scl_inter,) = _unpack(endian + "f", raw, _OFF_SCL_INTER)
    (sform_code,) = _unpack(endian + "h", raw, _OFF_SFORM_CODE)

    if sform_code > 0:
        rows = [
            _unpack(endian + "4f", raw, off)
            for off in (_OFF_SROW_X, _OFF_SROW_Y, _OFF_SROW_Z)
        ]
        affine = np.array(rows + [[0.0, 0.0, 0.0, 1.0]], dtype=np.float32)
    else:
        affine = np.diag(
            [abs(pixdim[1]), abs(pixdim[2]), abs(pixdim[3]), 1.0]
        ).astype(np.float32)

    return {
        "endian": endian,
        "shape": shape,
        "datatype": int(datatype),
        "spacing": tuple(abs(float(np.float32(p))) for p in pixdim[1:4]),
        "vox_offset": int(vox_offset),
        "scl_slope": float(scl_slope),
        "scl_inter": float(scl_inter),
        "affine": affine,
    }


def read_array(path):
    """Read any supported NIfTI-1 file.

    Returns ``(data, spacing, affine)`` with ``data`` in C order, native
    byte order, dtype float32 or uint8 as stored (float32 after slope or
    intercept scaling). Trailing extents of 1 are dropped down to three
    dimensions, so a file saved as (nx, ny, nz, 1) reads back as 3D.
    """
    with _open_for_read(path) as f:
        raw = f.read(HEADER_SIZE)
        hdr = _parse_header(raw)
        skip = hdr["vox_offset"] - HEADER_SIZE
        if skip:
            f.read(skip)
        dtype = np.dtype(np.uint8 if hdr["datatype"] == DT_UINT8 else np.float32)
        dtype = dtype.newbyteorder(hdr["endian"])
        count = int(np.prod(hdr["shape"]))
        payload = f.read(count * dtype.itemsize)

    if len(payload) < count * dtype.itemsize:
        raise FormatError(
            f"truncated payload: expected {count * dtype.itemsize} bytes, got {len(payload)}",
            offset=hdr["vox_offset"] + len(payload),
        )

    data = np.frombuffer(payload, dtype=dtype).reshape(hdr["shape"], order="F")
    data = np.ascontiguousarray(data, dtype=dtype.newbyteorder("="))

    shape = data.shape
    while len(shape) > 3 and shape[-1] == 1:
        shape = shape[:-1]
    data = data.reshape(shape)

    slope, inter = hdr["scl_slope"], hdr["scl_inter"]
    if np.isfinite(slope) and slope != 0.0 and (slope, inter) != (1.0, 0.0):
        data = (data.astype(np.float32) * np.float32(slope)) + np.float32(inter)

    return data, hdr["spacing"], hdr["affine"]


def read_volume(path):
    """Read a 3D volume; uint8 payloads over {0,1,2} become LabelVolume."""
    data, spacing, affine = read_array(path)
    if data.ndim != 3:
        raise FormatError(f"expected a 3D volume, file holds {data.ndim}D data", offset=_OFF_DIM)
    if data.dtype == np.uint8:
        if data.size == 0 or int(data.max()) <= 2:
            return LabelVolume(data, spacing=spacing, affine=affine)
        data = data.astype(np.float32)
    return ScalarVolume(data, spacing=spacing, affine=affine)


def _build_header(shape, datatype, spacing, affine):
    hdr = bytearray(HEADER_SIZE)
    struct.pack_into("<i", hdr, _OFF_SIZEOF_HDR, HEADER_SIZE)
    struct.pack_into("<B", hdr, 38, ord("r"))  # regular, conventional filler
    dim = [len(shape)] + list(shape) + [1] * (7 - len(shape))
    struct.pack_into("<8h", hdr, _OFF_DIM, *dim)
    bitpix = 8 if datatype == DT_UINT8 else 32
    struct.pack_into("<h", hdr, _OFF_DATATYPE, datatype)
    struct.pack_into("<h", hdr, _OFF_BITPIX, bitpix)
    pixdim = [1.0] + list(spacing) + [0.0] * (7 - len(spacing))
    struct.pack_into("<8f", hdr, _OFF_PIXDIM, *pixdim)
    struct.pack_into("<f", hdr, _OFF_VOX_OFFSET, float(DATA_OFFSET))
    struct.pack_into("<f", hdr, _OFF_SCL_SLOPE, 1.0)
    struct.pack_into("<f", hdr, _OFF_SCL_INTER, 0.0)
    struct.pack_into("<B", hdr, _OFF_XYZT_UNITS, 2)  # millimetres
    struct.pack_into("<h", hdr, _OFF_QFORM_CODE, 0)
    struct.pack_into("<h", hdr, _OFF_SFORM_CODE, 1)
    struct.pack_into("<4f", hdr, _OFF_SROW_X, *affine[0])
    struct.pack_into("<4f", hdr, _OFF_SROW_Y, *affine[1])
    struct.pack_into("<4f", hdr, _OFF_SROW_Z, *affine[2])
    hdr[_OFF_MAGIC:_OFF_MAGIC + 4] = MAGIC
    return bytes(hdr)


def write_array(data, path, spacing=(1.0, 1.0, 1.0), affine=None):
    """Write a 3D or 4D array as little-endian single-file NIfTI-1.

    dtype must be uint8 or float32. Gzip-compressed when the path ends in
    ``.gz``; compression settings are fixed so equal inputs give equal bytes.
    """
    data = np.asarray(data)
    if data.ndim not in (3, 4):
        raise ValueError(f"expected 3D or 4D data, got ndim={data.ndim}")
    if data.dtype == np.uint8:
        datatype = DT_UINT8
    elif data.dtype == np.float32:
        datatype = DT_FLOAT32
    else:
        raise ValueError(f"unsupported dtype {data.dtype}; use uint8 or float32")

    spacing = tuple(float(np.float32(s)) for s in spacing)
    if affine is None:
        affine = np.diag(list(spacing) + [1.0]).astype(np.float32)
    affine = np.asarray(affine, dtype=np.float32)
    if affine.shape != (4, 4):
        raise ValueError(f"affine must be 4x4, got {affine.shape}")

    hdr = _build_header(data.shape, datatype, spacing, affine)
    payload = np.ascontiguousarray(data).astype("<" + data.dtype.str[1:], copy=False)
    blob = hdr + b"\x00\x00\x00\x00" + payload.tobytes(order="F")

    tmp = f"{path}.tmp.{os.getpid()}"
    try:
        with open(tmp, "wb") as f:
            if str(path).endswith(".gz"):
                # filename and mtime pinned so equal content gives equal bytes
                with gzip.GzipFile(
                    filename="", fileobj=f, mode="wb", compresslevel=6, mtime=0
                ) as gz:
                    gz.write(blob)
            else:
                f.write(blob)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


def write_volume(vol, path, datatype=None):
    """Write a volume; images as float32, labels and masks as uint8."""
    if isinstance(vol, ScalarVolume):
        natural = "float32"
    elif isinstance(vol, (LabelVolume, MaskVolume)):
        natural = "uint8"
    else:
        raise TypeError(f"cannot write object of type {type(vol).__name__}")
    if datatype is None:
        datatype = natural
    if datatype != natural:
        raise ValueError(f"{type(vol).__name__} must be written as {natural}, not {datatype}")
    data = vol.data.astype(np.uint8) if datatype == "uint8" else vol.data
    write_array(data, path, spacing=vol.spacing, affine=vol.affine)
