"""Client for the sample-stream wire protocol.

One frame per single-byte request, all integers little-endian:

    frame:  magic "PMBA" | version u16 | sample_index u64 | dims 3 x u32
            | image float32 payload | label uint8 payload
            | CRC-32 u32 over the two payloads

A "PMBE" magic marks a server-side protocol error. Every received frame
is CRC-checked before use; any violation raises with the raw header so
the failure can be diagnosed from the log. ``StreamSource`` adds a
single prefetch worker that keeps one frame in flight while the
consumer computes.
"""

from __future__ import annotations

import queue
import socket
import struct
import threading
import zlib

import numpy as np

from headnet.errors import ProtocolError

FRAME_MAGIC = b"PMBA"
ERROR_MAGIC = b"PMBE"
PROTOCOL_VERSION = 1
REQUEST = b"\x01"

_HEADER = struct.Struct("<4sHQ3I")
_CRC = struct.Struct("<I")


class StreamClient:
    """Blocking one-frame-per-request client."""

    def __init__(self, host, port, timeout=120.0):
        self._sock = socket.create_connection((host, port), timeout=timeout)

    def close(self):
        self._sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _read_exactly(self, n):
        buf = bytearray(n)
        view = memoryview(buf)
        got = 0
        while got < n:
            step = self._sock.recv_into(view[got:])
            if not step:
                raise ProtocolError(f"connection closed mid-frame ({got}/{n} bytes)")
            got += step
        return buf

    def request(self):
        """Fetch one frame; returns (sample_index, image, labels)."""
        self._sock.sendall(REQUEST)
        header = bytes(self._read_exactly(_HEADER.size))
        magic, version, index, nx, ny, nz = _HEADER.unpack(header)
        if magic == ERROR_MAGIC:
            raise ProtocolError("server reported a protocol error", header=header)
        if magic != FRAME_MAGIC:
            raise ProtocolError(f"bad frame magic {magic!r}", header=header)
        if version != PROTOCOL_VERSION:
            raise ProtocolError(f"unsupported protocol version {version}", header=header)
        if min(nx, ny, nz) < 1:
            raise ProtocolError(f"non-positive dims {(nx, ny, nz)}", header=header)
        count = nx * ny * nz
        image_raw = self._read_exactly(count * 4)
        label_raw = self._read_exactly(count)
        (crc,) = _CRC.unpack(bytes(self._read_exactly(_CRC.size)))
        computed = zlib.crc32(label_raw, zlib.crc32(image_raw))
        if crc != computed:
            raise ProtocolError(
                f"CRC mismatch on sample {index}: header says {crc:#010x}, "
                f"payload gives {computed:#010x}",
                header=header,
            )
        image = np.frombuffer(image_raw, dtype="<f4").reshape(nx, ny, nz)
        labels = np.frombuffer(label_raw, dtype=np.uint8).reshape(nx, ny, nz)
        return index, image, labels


class StreamSource:
    """Iterator over streamed (image, labels) pairs with one-deep prefetch.

    The worker requests the next frame while the consumer processes the
    current one; transport or protocol failures surface on the next
    ``__next__`` call.
    """

    def __init__(self, host, port, timeout=120.0):
        self._client = StreamClient(host, port, timeout=timeout)
        self._queue = queue.Queue(maxsize=1)
        self._closed = threading.Event()
        self._worker = threading.Thread(target=self._run, daemon=True)
        self._worker.start()

    def _run(self):
        while not self._closed.is_set():
            try:
                frame = self._client.request()
            except Exception as exc:  # propagated to the consumer
                self._queue.put((None, exc))
                return
            self._queue.put((frame, None))

    def __iter__(self):
        return self

    def __next__(self):
        frame, exc = self._queue.get()
        if exc is not None:
            raise exc
        index, image, labels = frame
        return image, labels

    def close(self):
        self._closed.set()
        self._client.close()
        while True:  # unblock a worker waiting on a full queue
            try:
                self._queue.get_nowait()
            except queue.Empty:
                break
        self._worker.join(timeout=5.0)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
