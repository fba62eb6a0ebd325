"""Minimal single-file NIfTI-1 reader/writer.

Covers exactly what the training and inference paths exchange with the
generator tools: float32 images and probability maps, uint8 labels and
masks, 3D or 4D (class axis last), plain or gzip-compressed. Payloads
are stored in Fortran index order as the format prescribes; arrays in
memory are C-ordered with axis 0 = x. Both byte orders are accepted on
read; files are written little-endian with data at offset 352.
"""

from __future__ import annotations

import gzip
import os
import struct

import numpy as np

from headnet.errors import FormatError

_HEADER_SIZE = 348
_DATA_OFFSET = 352
_MAGIC = b"n+1\x00"
_GZIP_MAGIC = b"\x1f\x8b"

_DTYPE_CODES = {2: np.uint8, 16: np.float32}
_CODE_FOR = {np.dtype(np.uint8): 2, np.dtype(np.float32): 16}


def _reader(path):
    f = open(path, "rb")
    if f.read(2) == _GZIP_MAGIC:
        f.seek(0)
        return gzip.GzipFile(fileobj=f, mode="rb")
    f.seek(0)
    return f


def read_volume(path):
    """Read a supported file as ``(data, spacing, affine)``.

    ``data`` comes back C-contiguous in native byte order, float32 or
    uint8 as stored (float32 after any slope/intercept scaling), with
    trailing extents of 1 dropped down to 3D.
    """
    with _reader(path) as f:
        hdr = f.read(_HEADER_SIZE)
        if len(hdr) < _HEADER_SIZE:
            raise FormatError(f"file too short for a header ({len(hdr)} bytes)", offset=len(hdr))
        for endian in ("<", ">"):
            if struct.unpack_from(endian + "i", hdr, 0)[0] == _HEADER_SIZE:
                break
        else:
            raise FormatError("sizeof_hdr is not 348 in either byte order", offset=0)
        if hdr[344:348] != _MAGIC:
            raise FormatError(f"bad magic {hdr[344:348]!r}", offset=344)

        dim = struct.unpack_from(endian + "8h", hdr, 40)
        if not 1 <= dim[0] <= 4:
            raise FormatError(f"dim[0] is {dim[0]}, expected 1..4", offset=40)
        shape = tuple(int(d) for d in dim[1:1 + dim[0]])
        if any(d < 1 for d in shape):
            raise FormatError(f"non-positive extent in {shape}", offset=40)
        (code,) = struct.unpack_from(endian + "h", hdr, 70)
        if code not in _DTYPE_CODES:
            raise FormatError(f"unsupported datatype code {code}", offset=70)
        pixdim = struct.unpack_from(endian + "8f", hdr, 76)
        (vox_offset,) = struct.unpack_from(endian + "f", hdr, 108)
        if not vox_offset >= _HEADER_SIZE:
            raise FormatError(f"vox_offset {vox_offset} is inside the header", offset=108)
        slope, inter = struct.unpack_from(endian + "2f", hdr, 112)
        (sform,) = struct.unpack_from(endian + "h", hdr, 254)
        if sform > 0:
            rows = [struct.unpack_from(endian + "4f", hdr, off) for off in (280, 296, 312)]
            affine = np.array(rows + [[0.0, 0.0, 0.0, 1.0]], dtype=np.float32)
        else:
            affine = np.diag([abs(pixdim[1]), abs(pixdim[2]), abs(pixdim[3]), 1.0])
            affine = affine.astype(np.float32)

        f.read(int(vox_offset) - _HEADER_SIZE)
        dtype = np.dtype(_DTYPE_CODES[code]).newbyteorder(endian)
        count = int(np.prod(shape))
        payload = f.read(count * dtype.itemsize)

    if len(payload) < count * dtype.itemsize:
        raise FormatError(
            f"truncated payload: expected {count * dtype.itemsize} bytes, got {len(payload)}",
            offset=int(vox_offset) + len(payload),
        )
    data = np.frombuffer(payload, dtype=dtype).reshape(shape, order="F")
    data = np.ascontiguousarray(data, dtype=dtype.newbyteorder("="))
    while data.ndim > 3 and data.shape[-1] == 1:
        data = data.reshape(data.shape[:-1])
    if np.isfinite(slope) and slope != 0.0 and (slope, inter) != (1.0, 0.0):
        data = data.astype(np.float32) * np.float32(slope) + np.float32(inter)

    spacing = tuple(abs(float(np.float32(p))) for p in pixdim[1:4])
    return data, spacing, affine


def write_volume(data, path, spacing=(1.0, 1.0, 1.0), affine=None):
    """Write a 3D or 4D float32/uint8 array; gzip when the path ends in .gz."""
    data = np.asarray(data)
    if data.ndim not in (3, 4):
        raise ValueError(f"expected 3D or 4D data, got ndim={data.ndim}")
    if data.dtype not in _CODE_FOR:
        raise ValueError(f"unsupported dtype {data.dtype}; use uint8 or float32")
    spacing = tuple(float(np.float32(s)) for s in spacing)
    if affine is None:
        affine = np.diag(list(spacing) + [1.0])
    affine = np.asarray(affine, dtype=np.float32)
    if affine.shape != (4, 4):
        raise ValueError(f"affine must be 4x4, got {affine.shape}")

    hdr = bytearray(_HEADER_SIZE)
    struct.pack_into("<i", hdr, 0, _HEADER_SIZE)
    struct.pack_into("<B", hdr, 38, ord("r"))
    struct.pack_into("<8h", hdr, 40, data.ndim, *data.shape, *([1] * (7 - data.ndim)))
    struct.pack_into("<2h", hdr, 70, _CODE_FOR[data.dtype], data.dtype.itemsize * 8)
    struct.pack_into("<8f", hdr, 76, 1.0, *spacing, *([0.0] * 4))
    struct.pack_into("<f", hdr, 108, float(_DATA_OFFSET))
    struct.pack_into("<2f", hdr, 112, 1.0, 0.0)  # slope, intercept
    struct.pack_into("<B", hdr, 123, 2)  # spatial units: millimetres
    struct.pack_into("<h", hdr, 254, 1)  # sform: scanner anatomical
    for row, off in enumerate((280, 296, 312)):
        struct.pack_into("<4f", hdr, off, *affine[row])
    hdr[344:348] = _MAGIC

    payload = np.ascontiguousarray(data).astype(data.dtype.newbyteorder("<"), copy=False)
    blob = bytes(hdr) + b"\x00\x00\x00\x00" + payload.tobytes(order="F")
    tmp = f"{path}.tmp.{os.getpid()}"
    try:
        with open(tmp, "wb") as f:
            if str(path).endswith(".gz"):
                with gzip.GzipFile(filename="", fileobj=f, mode="wb", mtime=0) as gz:
                    gz.write(blob)
            else:
                f.write(blob)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)
