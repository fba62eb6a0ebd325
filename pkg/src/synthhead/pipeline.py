"""End-to-end synthesis of one labeled training sample.

Each sample is fully determined by (config, index, connection): a
dedicated random stream is derived for the sample, and every stage
(geometry, deformation, intensity, augmentation) draws from its own
child stream, so stages can evolve independently without perturbing
each other's randomness.
"""

from __future__ import annotations

from dataclasses import dataclass

from synthhead.deform import sample_displacement_field, warp_mask
from synthhead.intensity import synthesize_intensity
from synthhead.labels import make_labels
from synthhead.shapes import ShapeMasks, build_masks, sample_head_geometry
from synthhead.volume import (
    LabelVolume,
    ScalarVolume,
    flip,
    rotate90,
    sample_stream,
    translate,
)

# child-stream tags, one per pipeline stage
STAGE_GEOMETRY = 1
STAGE_DEFORM = 2
STAGE_INTENSITY = 3
STAGE_AUGMENT = 4


@dataclass(frozen=True)
class AugmentParams:
    """One drawn augmentation: applied identically to image and labels."""

    flipped_axes: tuple  # subset of ("x", "y", "z"), in application order
    quarter_turns: int  # rotations about z, 0..3
    offset: tuple  # integer voxel translation


@dataclass(frozen=True, eq=False)
class Sample:
    image: ScalarVolume
    labels: LabelVolume
    index: int
    stream_id: int


def sample_augment_params(rng, cfg):
    """Draw flip flags, a z quarter-turn count, and a translation offset."""
    gen = rng.generator()
    flipped = tuple(ax for ax in cfg.flip_axes if gen.random() < 0.5)
    turns = int(gen.integers(0, 4)) if cfg.rotate_z_quarter_turns else 0
    t = int(cfg.max_translation)
    offset = tuple(int(v) for v in gen.integers(-t, t + 1, size=3))
    return AugmentParams(flipped_axes=flipped, quarter_turns=turns, offset=offset)


def apply_augment_params(vol, params):
    """Apply flips, then the z rotation, then the translation."""
    out = vol
    for axis in params.flipped_axes:
        out = flip(out, axis)
    if params.quarter_turns % 4:
        out = rotate90(out, "z", params.quarter_turns)
    if any(params.offset):
        out = translate(out, params.offset, pad_value=0)
    return out


def generate_sample(cfg, index, connection=0):
    """Synthesize the labeled sample for a given index.

    The same (cfg, index, connection) always yields bit-identical
    output, independent of call order or worker threading.
    """
    cfg.validate()
    stream = sample_stream(cfg.seed, index, connection)

    geom = sample_head_geometry(stream.child(STAGE_GEOMETRY), cfg)
    masks = build_masks(geom, cfg.dims)

    deform_stream = stream.child(STAGE_DEFORM)
    lo, hi = cfg.deform.max_disp_range
    max_disp = float(deform_stream.child(1).generator().uniform(lo, hi))
    field = sample_displacement_field(
        deform_stream.child(2), cfg.dims, cfg.deform.control_spacing, max_disp
    )
    warped = ShapeMasks(
        shell=warp_mask(masks.shell, field),
        brain=warp_mask(masks.brain, field),
        artifacts=tuple((warp_mask(m, field), kind) for m, kind in masks.artifacts),
    )

    image = synthesize_intensity(warped, cfg.intensity, stream.child(STAGE_INTENSITY))
    labels = make_labels(warped.brain, cfg.labels)

    if cfg.augment.enabled:
        params = sample_augment_params(stream.child(STAGE_AUGMENT), cfg.augment)
        image = apply_augment_params(image, params)
        labels = apply_augment_params(labels, params)

    return Sample(image=image, labels=labels, index=index, stream_id=stream.stream_id)
