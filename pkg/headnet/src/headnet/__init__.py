"""U-Net brain extractor trained on streamed synthetic head volumes."""

from headnet.unet import UNetSpec, build_model, parameter_count

__all__ = ["UNetSpec", "build_model", "parameter_count"]
