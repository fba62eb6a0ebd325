"""Generator configuration: schema, validation, defaults, JSON round-trip.

Every sampling range the generator uses lives here. Configs serialize to
JSON with one section per pipeline stage; parsing is strict — unknown keys
are rejected rather than ignored, since a typo in a range name would
otherwise silently fall back to defaults.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from synthhead.errors import ConfigError

CONNECTIVITY_CHOICES = ("6-connected", "26-connected")


def _as_range(name, value, lo_bound=None):
    try:
        lo, hi = (float(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a [lo, hi] pair, got {value!r}") from None
    if not lo <= hi:
        raise ConfigError(f"{name} has lo > hi: [{lo}, {hi}]")
    if lo_bound is not None and lo < lo_bound:
        raise ConfigError(f"{name} lower bound must be >= {lo_bound}, got {lo}")
    return (lo, hi)


def _as_int_range(name, value, lo_bound=0):
    lo, hi = _as_range(name, value, lo_bound)
    if lo != int(lo) or hi != int(hi):
        raise ConfigError(f"{name} must contain integers, got [{lo}, {hi}]")
    return (int(lo), int(hi))


@dataclass(frozen=True)
class ShapeConfig:
    """Sampling ranges for the head geometry, all in voxel units."""

    outer_semiaxes_range: tuple = (38.0, 56.0)
    shell_thickness_range: tuple = (4.0, 10.0)
    brain_fraction_range: tuple = (0.55, 0.9)
    brain_z_scale_range: tuple = (0.6, 0.9)
    # center jitter, as a fraction of the cavity semiaxes
    center_jitter_fraction: float = 0.1
    artifact_count_range: tuple = (0, 4)
    artifact_semiaxes_range: tuple = (2.0, 8.0)
    # minimum voxel gap kept between the brain surface and the cavity
    containment_margin: float = 2.0

    def validate(self):
        _as_range("shape.outer_semiaxes_range", self.outer_semiaxes_range, 1.0)
        _as_range("shape.shell_thickness_range", self.shell_thickness_range, 0.5)
        _as_range("shape.brain_fraction_range", self.brain_fraction_range, 0.05)
        _as_range("shape.brain_z_scale_range", self.brain_z_scale_range, 0.05)
        if not 0.0 <= float(self.center_jitter_fraction) <= 0.5:
            raise ConfigError("shape.center_jitter_fraction must lie in [0, 0.5]")
        _as_int_range("shape.artifact_count_range", self.artifact_count_range)
        _as_range("shape.artifact_semiaxes_range", self.artifact_semiaxes_range, 0.5)
        if float(self.containment_margin) < 0:
            raise ConfigError("shape.containment_margin must be >= 0")


@dataclass(frozen=True)
class DeformConfig:
    """Smooth displacement field controls."""

    control_spacing: int = 16
    max_disp_range: tuple = (0.0, 8.0)

    def validate(self):
        if int(self.control_spacing) < 2:
            raise ConfigError("deform.control_spacing must be >= 2")
        _as_range("deform.max_disp_range", self.max_disp_range, 0.0)


@dataclass(frozen=True)
class IntensityParams:
    """Noise statistics for each painted region."""

    inner_mean_range: tuple = (0.4, 1.0)
    inner_std_range: tuple = (0.0, 0.4)
    inner_parts: int = 4
    outer_mean_range: tuple = (0.4, 1.0)
    outer_std_range: tuple = (0.0, 0.4)
    outer_parts: int = 4
    small_mean: float = 1.0
    small_std: float = 0.4
    background_mean: float = 0.1
    background_std: float = 0.1

    def validate(self):
        _as_range("intensity.inner_mean_range", self.inner_mean_range)
        _as_range("intensity.inner_std_range", self.inner_std_range, 0.0)
        _as_range("intensity.outer_mean_range", self.outer_mean_range)
        _as_range("intensity.outer_std_range", self.outer_std_range, 0.0)
        if int(self.inner_parts) < 1 or int(self.outer_parts) < 1:
            raise ConfigError("intensity parts counts must be >= 1")
        if float(self.small_std) < 0 or float(self.background_std) < 0:
            raise ConfigError("intensity std values must be >= 0")


@dataclass(frozen=True)
class LabelBandConfig:
    """Boundary band between brain and background in the training target."""

    band_thickness: int = 2
    structuring_element: str = "26-connected"

    def validate(self):
        if int(self.band_thickness) < 1:
            raise ConfigError("labels.band_thickness must be >= 1")
        if self.structuring_element not in CONNECTIVITY_CHOICES:
            raise ConfigError(
                f"labels.structuring_element must be one of {CONNECTIVITY_CHOICES}"
            )


@dataclass(frozen=True)
class AugmentConfig:
    """Augmentations applied to each generated sample (image and labels alike)."""

    enabled: bool = True
    flip_axes: tuple = ("x", "y", "z")  # each flipped with probability 1/2
    rotate_z_quarter_turns: bool = True
    max_translation: int = 8

    def validate(self):
        for ax in self.flip_axes:
            if ax not in ("x", "y", "z"):
                raise ConfigError(f"augment.flip_axes contains invalid axis {ax!r}")
        if len(set(self.flip_axes)) != len(self.flip_axes):
            raise ConfigError("augment.flip_axes contains duplicates")
        if int(self.max_translation) < 0:
            raise ConfigError("augment.max_translation must be >= 0")


@dataclass(frozen=True)
class GeneratorConfig:
    """Everything that determines a generated sample besides the seed/index."""

    dims: tuple = (128, 128, 128)
    seed: int = 0
    shape: ShapeConfig = field(default_factory=ShapeConfig)
    deform: DeformConfig = field(default_factory=DeformConfig)
    intensity: IntensityParams = field(default_factory=IntensityParams)
    labels: LabelBandConfig = field(default_factory=LabelBandConfig)
    augment: AugmentConfig = field(default_factory=AugmentConfig)

    def validate(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 3 or any(d < 8 for d in dims):
            raise ConfigError(f"dims must be three values >= 8, got {self.dims}")
        if int(self.seed) < 0:
            raise ConfigError("seed must be >= 0")
        if (
            self.augment.enabled
            and self.augment.rotate_z_quarter_turns
            and dims[0] != dims[1]
        ):
            # a quarter turn about z swaps the x/y extents
            raise ConfigError(
                f"rotate_z_quarter_turns requires dims[0] == dims[1], got {dims}"
            )
        self.shape.validate()
        self.deform.validate()
        self.intensity.validate()
        self.labels.validate()
        self.augment.validate()
        return self


_SECTION_TYPES = {
    "shape": ShapeConfig,
    "deform": DeformConfig,
    "intensity": IntensityParams,
    "labels": LabelBandConfig,
    "augment": AugmentConfig,
}


def _coerce(value):
    if isinstance(value, list):
        return tuple(_coerce(v) for v in value)
    return value


def _dataclass_from_dict(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must be a mapping, got {type(data).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown key(s) under {path}: {', '.join(unknown)}")
    kwargs = {}
    for key, value in data.items():
        sub = _SECTION_TYPES.get(key) if cls is GeneratorConfig else None
        kwargs[key] = (
            _dataclass_from_dict(sub, value, f"{path}.{key}") if sub else _coerce(value)
        )
    return cls(**kwargs)


def config_from_dict(data):
    """Build and validate a GeneratorConfig from plain dict data."""
    cfg = _dataclass_from_dict(GeneratorConfig, data, "config")
    cfg.validate()
    return cfg


def config_to_dict(cfg):
    def unpack(value):
        if dataclasses.is_dataclass(value):
            return {f.name: unpack(getattr(value, f.name)) for f in dataclasses.fields(value)}
        if isinstance(value, tuple):
            return [unpack(v) for v in value]
        return value

    return unpack(cfg)


def dumps_config(cfg):
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True) + "\n"


def loads_config(text):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err}") from None
    return config_from_dict(data)


def load_config(path):
    with open(path, "r", encoding="utf-8") as f:
        return loads_config(f.read())


def save_config(cfg, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps_config(cfg))


def scaled_default(dims, seed=0):
    """Default config proportionally rescaled from 128 to other cube sizes.

    Handy for fast tests and toy training runs at 32 or 64 voxels.
    """
    dims = tuple(int(d) for d in dims)
    s = min(dims) / 128.0
    shape = ShapeConfig(
        outer_semiaxes_range=(38.0 * s, 56.0 * s),
        shell_thickness_range=(max(1.0, 4.0 * s), max(1.5, 10.0 * s)),
        artifact_semiaxes_range=(max(1.0, 2.0 * s), max(1.5, 8.0 * s)),
        containment_margin=max(1.0, 2.0 * s),
    )
    deform = DeformConfig(
        control_spacing=max(2, round(16 * s)),
        max_disp_range=(0.0, 8.0 * s),
    )
    augment = AugmentConfig(max_translation=max(1, round(8 * s)))
    cfg = GeneratorConfig(dims=dims, seed=seed, shape=shape, deform=deform, augment=augment)
    return cfg.validate()
