"""Procedural head/brain volume synthesis and brain-mask extraction toolkit."""

from synthhead.config import (
    GeneratorConfig,
    load_config,
    save_config,
    scaled_default,
)
from synthhead.dataset import generate_dataset, load_manifest
from synthhead.errors import (
    ConfigError,
    FormatError,
    OutOfBoundsError,
    ProtocolError,
    SynthheadError,
)
from synthhead.metrics import dice, evaluate_pair, hausdorff, jaccard
from synthhead.nifti import read_volume, write_volume
from synthhead.pipeline import Sample, generate_sample
from synthhead.postprocess import argmax_labels, select_brain_mask
from synthhead.stream import StreamClient, StreamServer, serve_stream
from synthhead.volume import (
    LABEL_BACKGROUND,
    LABEL_BOUNDARY,
    LABEL_BRAIN,
    LabelVolume,
    MaskVolume,
    RngStream,
    ScalarVolume,
    flip,
    new_volume,
    resample,
    rotate90,
    sample_stream,
    translate,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "FormatError",
    "OutOfBoundsError",
    "ProtocolError",
    "SynthheadError",
    "GeneratorConfig",
    "LABEL_BACKGROUND",
    "LABEL_BOUNDARY",
    "LABEL_BRAIN",
    "LabelVolume",
    "MaskVolume",
    "RngStream",
    "Sample",
    "ScalarVolume",
    "StreamClient",
    "StreamServer",
    "argmax_labels",
    "dice",
    "evaluate_pair",
    "flip",
    "generate_dataset",
    "generate_sample",
    "hausdorff",
    "jaccard",
    "load_config",
    "load_manifest",
    "new_volume",
    "read_volume",
    "resample",
    "rotate90",
    "sample_stream",
    "save_config",
    "scaled_default",
    "select_brain_mask",
    "serve_stream",
    "translate",
    "write_volume",
    "__version__",
]
