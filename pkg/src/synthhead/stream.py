"""Socket streaming of freshly generated samples.

Wire protocol, all integers little-endian:

    request:  single byte 0x01 per frame
    frame:    magic "PMBA" | version u16 | sample_index u64 | dims 3 x u32
              | image float32 payload (nx*ny*nz*4 bytes, C order)
              | label uint8 payload (nx*ny*nz bytes, C order)
              | CRC-32 u32 over the two payloads
    error:    same header with magic "PMBE", zero dims, empty payloads,
              CRC of the empty payload; the connection closes after it

Each connection gets its own deterministic sample sequence derived from
(master seed, connection number). Connection numbers count from 0, the
same namespace offline generation uses, so a server's first client
receives byte for byte the dataset `generate` would write for the same
seed. Sample synthesis for the next frame overlaps the transfer of the
current one.
"""

from __future__ import annotations

import itertools
import socket
import struct
import threading
import zlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from synthhead.errors import ProtocolError
from synthhead.pipeline import generate_sample

FRAME_MAGIC = b"PMBA"
ERROR_MAGIC = b"PMBE"
PROTOCOL_VERSION = 1
REQUEST_NEXT = b"\x01"

_HEADER = struct.Struct("<4sHQ3I")
_CRC = struct.Struct("<I")


def frame_parts(sample_index, image, labels):
    """Frame as (header, image array, label array, crc) send buffers."""
    if image.dims != labels.dims:
        raise ValueError(f"image dims {image.dims} do not match labels {labels.dims}")
    img = np.ascontiguousarray(image.data.astype("<f4", copy=False))
    lab = np.ascontiguousarray(labels.data)
    crc = zlib.crc32(lab, zlib.crc32(img))
    header = _HEADER.pack(
        FRAME_MAGIC, PROTOCOL_VERSION, int(sample_index), *image.dims
    )
    return header, img, lab, _CRC.pack(crc)


def pack_frame(sample_index, image, labels):
    """Serialize one sample to frame bytes."""
    header, img, lab, crc = frame_parts(sample_index, image, labels)
    return b"".join(
        (header, memoryview(img).cast("B"), memoryview(lab).cast("B"), crc)
    )


def pack_error_frame():
    """Serialize the protocol-error frame (empty payloads)."""
    header = _HEADER.pack(ERROR_MAGIC, PROTOCOL_VERSION, 0, 0, 0, 0)
    return header + _CRC.pack(zlib.crc32(b""))


def _read_exactly(stream, n):
    buf = bytearray(n)
    view = memoryview(buf)
    got = 0
    readinto = getattr(stream, "readinto", None)
    while got < n:
        if readinto is not None:
            step = readinto(view[got:])
        else:
            chunk = stream.read(n - got)
            step = len(chunk)
            view[got:got + step] = chunk
        if not step:
            raise ProtocolError(f"connection closed mid-frame ({got}/{n} bytes)")
        got += step
    return buf


def read_frame(stream):
    """Read one frame from a binary stream; returns (index, image, labels).

    Arrays are float32 and uint8 with shape dims. Raises ProtocolError
    on a bad magic, version mismatch, checksum failure, or short read;
    an error frame raises with the server's signal spelled out.
    """
    header = _read_exactly(stream, _HEADER.size)
    magic, version, sample_index, nx, ny, nz = _HEADER.unpack(header)
    if magic == ERROR_MAGIC:
        _read_exactly(stream, _CRC.size)
        raise ProtocolError("server sent a protocol-error frame")
    if magic != FRAME_MAGIC:
        raise ProtocolError(f"bad frame magic {magic!r}")
    if version != PROTOCOL_VERSION:
        raise ProtocolError(f"unsupported protocol version {version}")
    count = nx * ny * nz
    img_bytes = _read_exactly(stream, count * 4)
    lab_bytes = _read_exactly(stream, count)
    (crc,) = _CRC.unpack(_read_exactly(stream, _CRC.size))
    actual = zlib.crc32(lab_bytes, zlib.crc32(img_bytes))
    if crc != actual:
        raise ProtocolError(f"checksum mismatch: frame says {crc}, payload {actual}")
    image = np.frombuffer(img_bytes, dtype="<f4").astype(np.float32, copy=False)
    labels = np.frombuffer(lab_bytes, dtype=np.uint8)
    return sample_index, image.reshape(nx, ny, nz), labels.reshape(nx, ny, nz)


class StreamClient:
    """Minimal blocking client: one frame per request()."""

    def __init__(self, host, port, timeout=60.0):
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._file = self._sock.makefile("rb")

    def request(self):
        self._sock.sendall(REQUEST_NEXT)
        return read_frame(self._file)

    def send_raw(self, data):
        self._sock.sendall(data)

    def read_raw_frame(self):
        return read_frame(self._file)

    def close(self):
        self._file.close()
        self._sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


class StreamServer:
    """Serves one deterministic sample sequence per connection."""

    def __init__(self, cfg, host="127.0.0.1", port=0):
        cfg.validate()
        self._cfg = cfg
        self._sock = socket.create_server((host, port))
        self._sock.settimeout(0.2)
        self._stop = threading.Event()
        self._accept_thread = None
        self._handlers = []
        # first connection shares namespace 0 with offline generation, so
        # streaming reproduces the on-disk dataset for the same seed
        self._connections = itertools.count(0)

    @property
    def address(self):
        """(host, port) actually bound; port is concrete even when 0 was asked."""
        return self._sock.getsockname()[:2]

    def start(self):
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._accept_thread.start()
        return self

    def serve_forever(self):
        self._accept_loop()

    def _accept_loop(self):
        while not self._stop.is_set():
            try:
                conn, _ = self._sock.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            t = threading.Thread(
                target=self._handle,
                args=(conn, next(self._connections)),
                daemon=True,
            )
            t.start()
            self._handlers = [h for h in self._handlers if h.is_alive()]
            self._handlers.append(t)

    def _handle(self, conn, connection_id):
        conn.settimeout(0.2)
        # single prefetch worker: synthesizes frame i+1 while i transfers
        with conn, ThreadPoolExecutor(max_workers=1) as pool:
            index = 0
            pending = pool.submit(self._make_frame, index, connection_id)
            while not self._stop.is_set():
                try:
                    req = conn.recv(1)
                except socket.timeout:
                    continue
                except OSError:
                    break
                if not req:
                    break
                if req != REQUEST_NEXT:
                    try:
                        conn.sendall(pack_error_frame())
                    except OSError:
                        pass
                    break
                parts = pending.result()
                index += 1
                pending = pool.submit(self._make_frame, index, connection_id)
                try:
                    for part in parts:
                        conn.sendall(part)
                except OSError:
                    break
            pending.cancel()

    def _make_frame(self, index, connection_id):
        sample = generate_sample(self._cfg, index, connection=connection_id)
        return frame_parts(index, sample.image, sample.labels)

    def close(self):
        self._stop.set()
        self._sock.close()
        if self._accept_thread is not None:
            self._accept_thread.join(timeout=5.0)
        for t in self._handlers:
            t.join(timeout=5.0)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def parse_endpoint(endpoint):
    """Split "host:port" (port may be 0 for ephemeral)."""
    host, sep, port = endpoint.rpartition(":")
    if not sep or not host:
        raise ValueError(f"endpoint must be host:port, got {endpoint!r}")
    return host, int(port)


def serve_stream(cfg, endpoint):
    """Run a streaming server on host:port until interrupted."""
    host, port = parse_endpoint(endpoint)
    with StreamServer(cfg, host=host, port=port) as server:
        print(f"serving on {server.address[0]}:{server.address[1]}", flush=True)
        server.serve_forever()
