"""Wire protocol framing and the streaming server loopback behavior."""

import io
import struct
import zlib

import numpy as np
import pytest

from synthhead.config import scaled_default
from synthhead.errors import ProtocolError
from synthhead.pipeline import generate_sample
from synthhead.stream import (
    ERROR_MAGIC,
    FRAME_MAGIC,
    PROTOCOL_VERSION,
    StreamClient,
    StreamServer,
    pack_error_frame,
    pack_frame,
    parse_endpoint,
    read_frame,
)
from synthhead.volume import LabelVolume, ScalarVolume


def small_config(seed=0):
    return scaled_default((32, 32, 32), seed=seed)


def random_pair(seed, dims=(6, 5, 4)):
    gen = np.random.default_rng(seed)
    img = ScalarVolume(gen.random(dims, dtype=np.float32))
    lab = LabelVolume(gen.integers(0, 3, size=dims).astype(np.uint8))
    return img, lab


# ---------------------------------------------------------------------------
# framing
# ---------------------------------------------------------------------------


def test_frame_round_trip():
    img, lab = random_pair(0)
    frame = pack_frame(7, img, lab)
    index, got_img, got_lab = read_frame(io.BytesIO(frame))
    assert index == 7
    assert np.array_equal(got_img, img.data)
    assert np.array_equal(got_lab, lab.data)


def test_frame_layout_is_bit_specified():
    img, lab = random_pair(1)
    frame = pack_frame(3, img, lab)
    magic, version, index, nx, ny, nz = struct.unpack("<4sHQ3I", frame[:26])
    assert magic == FRAME_MAGIC
    assert version == PROTOCOL_VERSION
    assert index == 3
    assert (nx, ny, nz) == img.dims
    n = nx * ny * nz
    assert len(frame) == 26 + 4 * n + n + 4
    img_bytes = frame[26 : 26 + 4 * n]
    lab_bytes = frame[26 + 4 * n : 26 + 5 * n]
    assert img_bytes == img.data.astype("<f4").tobytes()
    assert lab_bytes == lab.data.tobytes()
    (crc,) = struct.unpack("<I", frame[-4:])
    assert crc == zlib.crc32(img_bytes + lab_bytes)


def test_corrupted_payload_fails_checksum():
    img, lab = random_pair(2)
    frame = bytearray(pack_frame(0, img, lab))
    frame[40] ^= 0xFF
    with pytest.raises(ProtocolError, match="checksum"):
        read_frame(io.BytesIO(bytes(frame)))


def test_bad_magic_rejected():
    img, lab = random_pair(3)
    frame = b"XXXX" + pack_frame(0, img, lab)[4:]
    with pytest.raises(ProtocolError, match="magic"):
        read_frame(io.BytesIO(frame))


def test_version_mismatch_rejected():
    img, lab = random_pair(4)
    frame = bytearray(pack_frame(0, img, lab))
    struct.pack_into("<H", frame, 4, PROTOCOL_VERSION + 1)
    with pytest.raises(ProtocolError, match="version"):
        read_frame(io.BytesIO(bytes(frame)))


def test_truncated_frame_rejected():
    img, lab = random_pair(5)
    frame = pack_frame(0, img, lab)
    with pytest.raises(ProtocolError, match="closed mid-frame"):
        read_frame(io.BytesIO(frame[:-10]))


def test_error_frame_raises_with_signal():
    frame = pack_error_frame()
    assert frame[:4] == ERROR_MAGIC
    with pytest.raises(ProtocolError, match="protocol-error frame"):
        read_frame(io.BytesIO(frame))


def test_mismatched_dims_rejected_at_pack():
    img, _ = random_pair(6)
    _, lab = random_pair(6, dims=(4, 4, 4))
    with pytest.raises(ValueError):
        pack_frame(0, img, lab)


def test_parse_endpoint():
    assert parse_endpoint("127.0.0.1:80") == ("127.0.0.1", 80)
    assert parse_endpoint("localhost:0") == ("localhost", 0)
    with pytest.raises(ValueError):
        parse_endpoint("8080")
    with pytest.raises(ValueError):
        parse_endpoint(":8080")


# ---------------------------------------------------------------------------
# server loopback
# ---------------------------------------------------------------------------


def test_five_frames_valid_and_strictly_increasing():
    cfg = small_config(seed=1)
    with StreamServer(cfg).start() as server:
        host, port = server.address
        with StreamClient(host, port) as client:
            indices = []
            for _ in range(5):
                index, img, lab = client.request()
                indices.append(index)
                assert img.shape == cfg.dims
                assert lab.shape == cfg.dims
                assert set(np.unique(lab)) <= {0, 1, 2}
    assert indices == [0, 1, 2, 3, 4]


def test_first_connection_replays_offline_namespace():
    cfg = small_config(seed=2)
    with StreamServer(cfg).start() as server:
        host, port = server.address
        with StreamClient(host, port) as client:
            _, img, lab = client.request()
    expect = generate_sample(cfg, 0, connection=0)
    assert np.array_equal(img, expect.image.data)
    assert np.array_equal(lab, expect.labels.data)


def test_connections_get_independent_sequences():
    cfg = small_config(seed=3)
    with StreamServer(cfg).start() as server:
        host, port = server.address
        with StreamClient(host, port) as a:
            _, img_a, _ = a.request()
        with StreamClient(host, port) as b:
            index_b, img_b, lab_b = b.request()
    assert index_b == 0  # per-connection counter restarts
    assert not np.array_equal(img_a, img_b)
    expect = generate_sample(cfg, 0, connection=1)
    assert np.array_equal(img_b, expect.image.data)
    assert np.array_equal(lab_b, expect.labels.data)


def test_equal_seed_servers_emit_identical_sequences():
    cfg = small_config(seed=4)
    frames = []
    for _ in range(2):
        with StreamServer(cfg).start() as server:
            host, port = server.address
            with StreamClient(host, port) as client:
                frames.append([client.request() for _ in range(3)])
    for (ia, img_a, lab_a), (ib, img_b, lab_b) in zip(*frames):
        assert ia == ib
        assert np.array_equal(img_a, img_b)
        assert np.array_equal(lab_a, lab_b)


def test_bad_request_byte_gets_error_frame_then_close():
    cfg = small_config(seed=5)
    with StreamServer(cfg).start() as server:
        host, port = server.address
        with StreamClient(host, port) as client:
            client.send_raw(b"\x02")
            with pytest.raises(ProtocolError, match="protocol-error frame"):
                client.read_raw_frame()
            with pytest.raises(ProtocolError, match="closed mid-frame"):
                client.read_raw_frame()
