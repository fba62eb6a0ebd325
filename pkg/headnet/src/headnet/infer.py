"""Brain extraction: normalize, resample, infer, hand off to postprocess.

The network sees a min-max normalized copy of the input resampled to its
contract grid. Class probabilities are resampled back to the native grid
(trilinear per class, then renormalized to sum to 1) rather than
resampling the hard mask, which would stair-step the decision boundary.
The final mask is produced by the generator toolkit's ``postprocess``
command run as a subprocess on the native-resolution probabilities, so
its boundary-guided component selection is shared, not reimplemented.
"""

from __future__ import annotations

import os
import shlex
import shutil
import subprocess
import sys
import tempfile

import numpy as np
import torch
import torch.nn.functional as F

from headnet.errors import EmptyBrainError, HeadnetError
from headnet.nifti import read_volume, write_volume
from headnet.train import load_checkpoint

_EXIT_EMPTY_BRAIN = 3


def default_postprocess_command():
    """The generator CLI, from PATH or as a module of this interpreter."""
    exe = shutil.which("synthhead")
    if exe:
        return [exe]
    return [sys.executable, "-m", "synthhead.cli"]


def min_max_normalize(image):
    """Affinely map intensities onto [0, 1]; constant images become zeros."""
    image = np.asarray(image, dtype=np.float32)
    lo = float(image.min())
    span = float(image.max()) - lo
    if span == 0.0:
        return np.zeros_like(image)
    return (image - lo) / np.float32(span)


def _resample(tensor, dims):
    # corners map to corners, matching the generator's resampling convention
    if tuple(tensor.shape[2:]) == tuple(dims):
        return tensor
    return F.interpolate(tensor, size=tuple(dims), mode="trilinear", align_corners=True)


def predict_probabilities(model, image):
    """Native-dims class probabilities, shaped (nx, ny, nz, classes)."""
    native_dims = image.shape
    x = torch.from_numpy(min_max_normalize(image))[None, None]
    with torch.no_grad():
        probs = model(_resample(x, model.spec.in_dims))
        probs = _resample(probs, native_dims)
    probs = probs.clamp(min=0.0)
    probs = probs / probs.sum(dim=1, keepdim=True).clamp(min=1e-12)
    return np.ascontiguousarray(probs[0].permute(1, 2, 3, 0).numpy(), dtype=np.float32)


def run_postprocess(probs_path, out_path, command=None):
    """Reduce a probability volume to the final mask via the generator CLI."""
    command = list(command) if command else default_postprocess_command()
    proc = subprocess.run(
        command + ["postprocess", "--in", probs_path, "--out", out_path],
        capture_output=True,
        text=True,
    )
    if proc.returncode == _EXIT_EMPTY_BRAIN:
        raise EmptyBrainError(f"no brain found in {probs_path}")
    if proc.returncode != 0:
        raise HeadnetError(
            f"postprocess failed with exit {proc.returncode}: {proc.stderr.strip()}"
        )


def extract_brain(image_path, weights_path, out_path, command=None):
    """Write the native-resolution brain mask for one image.

    Raises ``EmptyBrainError`` when post-processing finds no brain, in
    which case no output file is written.
    """
    image, spacing, affine = read_volume(image_path)
    if image.ndim != 3:
        raise ValueError(f"expected a 3D image, {image_path} holds {image.ndim}D data")
    model, _ = load_checkpoint(weights_path)
    probs = predict_probabilities(model, np.asarray(image, dtype=np.float32))

    fd, probs_path = tempfile.mkstemp(suffix=".nii", prefix="headnet_probs_")
    os.close(fd)
    try:
        write_volume(probs, probs_path, spacing=spacing, affine=affine)
        run_postprocess(probs_path, out_path, command=command)
    finally:
        os.remove(probs_path)


def parse_command(text):
    """Split a user-supplied postprocess command string; None passes through."""
    return shlex.split(text) if text else None
