"""Held-out evaluation: extract a brain per image, score against labels.

Ground truth is the generation-time label volume, class 1 being brain.
A sample where post-processing finds no brain scores 0 when the ground
truth has one (and 1 when it does not), so failures count against the
mean instead of vanishing from it.
"""

from __future__ import annotations

import os
import tempfile

import numpy as np

from headnet.data import _IMAGE_SUFFIXES, _strip, list_pairs
from headnet.errors import EmptyBrainError
from headnet.infer import extract_brain
from headnet.nifti import read_volume


def dice(a, b):
    """Overlap score 2|A^B| / (|A|+|B|); two empty masks count as 1."""
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    total = int(a.sum()) + int(b.sum())
    if total == 0:
        return 1.0
    return 2.0 * int(np.logical_and(a, b).sum()) / total


def evaluate(weights_path, data_dir, command=None):
    """Score every pair in a directory; yields one record per sample."""
    for image_path, labels_path in list_pairs(data_dir):
        name = _strip(os.path.basename(image_path), _IMAGE_SUFFIXES)
        labels, _, _ = read_volume(labels_path)
        truth = np.asarray(labels) == 1
        fd, mask_path = tempfile.mkstemp(suffix=".nii", prefix="headnet_mask_")
        os.close(fd)
        try:
            try:
                extract_brain(image_path, weights_path, mask_path, command=command)
                mask, _, _ = read_volume(mask_path)
                predicted = np.asarray(mask) != 0
            except EmptyBrainError:
                predicted = np.zeros(truth.shape, dtype=bool)
            yield {"id": name, "dice": dice(predicted, truth)}
        finally:
            if os.path.exists(mask_path):
                os.remove(mask_path)
