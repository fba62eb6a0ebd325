"""Offline dataset generation: sample files plus a manifest.

Each sample i is generated from its own sub-stream of the master seed,
so the written bytes depend only on (config, n) and never on worker
count or completion order.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor

from synthhead.config import config_to_dict, dumps_config
from synthhead.nifti import write_volume
from synthhead.pipeline import generate_sample

MANIFEST_NAME = "manifest.json"

_IMAGE_PATTERN = "sample_{:06d}_image.nii"
_LABELS_PATTERN = "sample_{:06d}_labels.nii.gz"


def config_digest(cfg):
    """Hex SHA-256 of the canonical config serialization."""
    return hashlib.sha256(dumps_config(cfg).encode("utf-8")).hexdigest()


def sample_filenames(index):
    """(image, labels) basenames for a sample index."""
    return _IMAGE_PATTERN.format(index), _LABELS_PATTERN.format(index)


def _write_sample(cfg, index, out_dir):
    sample = generate_sample(cfg, index)
    image_name, labels_name = sample_filenames(index)
    write_volume(sample.image, os.path.join(out_dir, image_name))
    write_volume(sample.labels, os.path.join(out_dir, labels_name))
    return {
        "index": index,
        "stream_id": sample.stream_id,
        "image": image_name,
        "labels": labels_name,
    }


def generate_dataset(cfg, n, out_dir, workers=1):
    """Write n labeled sample pairs and a manifest; returns the manifest.

    The manifest records the full config, its digest, and one entry per
    sample (index, sub-stream id, file names). n = 0 writes only the
    manifest.
    """
    cfg.validate()
    n = int(n)
    if n < 0:
        raise ValueError(f"sample count must be >= 0, got {n}")
    workers = max(1, int(workers))
    os.makedirs(out_dir, exist_ok=True)

    if workers == 1 or n <= 1:
        entries = [_write_sample(cfg, i, out_dir) for i in range(n)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(lambda i: _write_sample(cfg, i, out_dir), range(n)))
    entries.sort(key=lambda e: e["index"])

    manifest = {
        "config": config_to_dict(cfg),
        "config_sha256": config_digest(cfg),
        "count": n,
        "samples": entries,
    }
    tmp = os.path.join(out_dir, MANIFEST_NAME + ".tmp")
    with open(tmp, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    os.replace(tmp, os.path.join(out_dir, MANIFEST_NAME))
    return manifest


def load_manifest(path):
    """Read a manifest written by generate_dataset; accepts dir or file path."""
    if os.path.isdir(path):
        path = os.path.join(path, MANIFEST_NAME)
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)
