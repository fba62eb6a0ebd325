"""Sample sources: a generated dataset directory or a live stream.

Both yield (image, labels) pairs of numpy arrays, image float32 and
labels uint8, shaped (nx, ny, nz). Directory sources pair files named
``<stem>_image.nii[.gz]`` with ``<stem>_labels.nii[.gz]`` and replay
them in sorted order, cycling when asked for more samples than exist;
stream sources are endless by construction.
"""

from __future__ import annotations

import os

import numpy as np

from headnet.nifti import read_volume
from headnet.stream import StreamSource

_IMAGE_SUFFIXES = ("_image.nii", "_image.nii.gz")
_LABEL_SUFFIXES = ("_labels.nii", "_labels.nii.gz")


def _strip(name, suffixes):
    for suffix in suffixes:
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return None


def list_pairs(directory):
    """Sorted (image_path, labels_path) pairs found in a directory.

    An image without its labels file is an error; a directory with no
    pairs at all is not, it gives an empty list.
    """
    names = sorted(os.listdir(directory))
    labels = {}
    for name in names:
        stem = _strip(name, _LABEL_SUFFIXES)
        if stem is not None:
            labels[stem] = os.path.join(directory, name)
    pairs = []
    for name in names:
        stem = _strip(name, _IMAGE_SUFFIXES)
        if stem is None:
            continue
        if stem not in labels:
            raise FileNotFoundError(f"no labels file for {name} in {directory}")
        pairs.append((os.path.join(directory, name), labels[stem]))
    return pairs


class DirectorySource:
    """Endless iterator over a dataset directory, in sorted order."""

    def __init__(self, directory):
        self._pairs = list_pairs(directory)
        if not self._pairs:
            raise FileNotFoundError(f"no image/labels pairs in {directory}")
        self._at = 0

    def __iter__(self):
        return self

    def __next__(self):
        image_path, labels_path = self._pairs[self._at]
        self._at = (self._at + 1) % len(self._pairs)
        image, _, _ = read_volume(image_path)
        labels, _, _ = read_volume(labels_path)
        return np.asarray(image, dtype=np.float32), np.asarray(labels, dtype=np.uint8)

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def open_source(source):
    """Build a sample source from ``host:port`` or a directory path."""
    text = str(source)
    if not os.path.isdir(text) and ":" in text:
        host, _, port = text.rpartition(":")
        return StreamSource(host, int(port))
    return DirectorySource(text)
