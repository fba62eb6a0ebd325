"""Full-scale generation run, gated behind RUN_FULL_SCALE=1.

Writes a complete default-size dataset (3000 samples at 128^3), which
takes on the order of twenty minutes on one core, then spot-checks every
hundredth sample. The quick per-module suites cover the same invariants
at small scale; this exists to exercise the real production volume.
"""

import os

import numpy as np
import pytest

from synthhead.config import GeneratorConfig
from synthhead.dataset import generate_dataset, load_manifest, sample_filenames
from synthhead.nifti import read_volume

pytestmark = pytest.mark.slow

FULL_SCALE = os.environ.get("RUN_FULL_SCALE") == "1"


@pytest.mark.skipif(not FULL_SCALE, reason="set RUN_FULL_SCALE=1 to run")
def test_full_default_dataset_generates_clean(tmp_path):
    cfg = GeneratorConfig(seed=1234)
    count = 3000
    manifest = generate_dataset(cfg, count, str(tmp_path))

    assert manifest["count"] == count
    assert len(manifest["samples"]) == count
    assert load_manifest(str(tmp_path)) == manifest

    for entry in manifest["samples"][::100]:
        image_name, labels_name = sample_filenames(entry["index"])
        assert (entry["image"], entry["labels"]) == (image_name, labels_name)
        image = read_volume(str(tmp_path / image_name))
        labels = read_volume(str(tmp_path / labels_name))
        assert image.dims == cfg.dims
        assert labels.dims == cfg.dims
        assert np.isfinite(image.data).all()
        assert float(image.data.min()) >= 0.0
        assert float(image.data.max()) == 1.0
        values = set(np.unique(labels.data).tolist())
        assert values <= {0, 1, 2}
        assert 1 in values, f"sample {entry['index']} has no brain voxels"
