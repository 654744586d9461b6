"""Configuration schema: every sampling range of the generative model.

The defaults are the uniform domain-randomization starter ranges (one
entry per table row), plus structural toggles and per-stage application
probabilities. Configs serialize to YAML with a versioned schema field;
unknown keys are errors so range-name typos cannot pass silently.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import yaml

from .errors import ConfigError

SCHEMA_VERSION = 1

# the fourteen starter ranges, in document order
RANGE_FIELDS = (
    "translation_mm",
    "rotation_deg",
    "scaling_pct",
    "shear_pct",
    "warp_strength_mm",
    "warp_control_points",
    "crop_proportion_pct",
    "intensity_mean",
    "bias_drop_pct",
    "bias_control_points",
    "blur_sd_mm",
    "noise_sd_pct",
    "gamma",
    "downsample_factor",
)

STRUCTURE_FIELDS = (
    "warp_noise_kind",
    "use_svf",
    "svf_steps",
    "quintic_fade",
    "bias_variant",
    "bias_exp_sd",
    "label_output",
    "crop_multi_axis",
    "downsample_interp",
    "downsample_labels",
    "clear_slices",
    "brain_labels",
    "lut_forced",
    "lut_ties",
)

STAGES_WITH_PROBABILITY = ("bias", "blur", "noise", "gamma", "downsample",
                           "crop", "clear_slices", "skullstrip")

# ranges that max_effect_config knows how to degenerate to their maximum
MAX_EFFECT_STAGES = {
    "translation": "translation_mm",
    "rotation": "rotation_deg",
    "scaling": "scaling_pct",
    "shear": "shear_pct",
    "warp": "warp_strength_mm",
    "crop": "crop_proportion_pct",
    "bias": "bias_drop_pct",
    "blur": "blur_sd_mm",
    "noise": "noise_sd_pct",
    "gamma": "gamma",
    "downsample": "downsample_factor",
}


@dataclass(frozen=True)
class SynthesisConfig:
    # spatial augmentation
    translation_mm: tuple = (-30.0, 30.0)
    rotation_deg: tuple = (-30.0, 30.0)
    scaling_pct: tuple = (90.0, 110.0)
    shear_pct: tuple = (90.0, 110.0)
    warp_strength_mm: tuple = (0.0, 20.0)
    warp_control_points: tuple = (2, 16)
    crop_proportion_pct: tuple = (0.0, 20.0)
    # synthesis + corruptions
    intensity_mean: tuple = (0.0, 1.0)
    bias_drop_pct: tuple = (0.0, 50.0)
    bias_control_points: tuple = (2, 4)
    blur_sd_mm: tuple = (0.0, 2.0)
    noise_sd_pct: tuple = (0.0, 10.0)
    gamma: tuple = (0.5, 1.5)
    downsample_factor: tuple = (1.0, 4.0)
    # structural toggles
    ndim: int = 3
    voxel_size_mm: tuple = (1.0, 1.0, 1.0)
    warp_noise_kind: str = "perlin"
    use_svf: bool = True
    svf_steps: int = 7
    quintic_fade: bool = False
    bias_variant: str = "normalized-drop"
    bias_exp_sd: float = 0.33
    label_output: str = "cropped"
    crop_multi_axis: bool = False
    downsample_interp: str = "linear"
    downsample_labels: bool = False
    clear_slices: tuple = (0, 0)
    brain_labels: tuple = ()
    lut_forced: dict = field(default_factory=dict)
    lut_ties: tuple = ()
    # per-stage application probabilities; aggressive corruptions are
    # applied only some of the time
    prob_bias: float = 1.0
    prob_blur: float = 0.5
    prob_noise: float = 1.0
    prob_gamma: float = 1.0
    prob_downsample: float = 0.5
    prob_crop: float = 0.5
    prob_clear_slices: float = 0.5
    prob_skullstrip: float = 0.5

    def __post_init__(self):
        for name in RANGE_FIELDS + ("clear_slices",):
            pair = getattr(self, name)
            if len(pair) != 2:
                raise ConfigError(f"{name} must be a two-element range")
            if pair[0] > pair[1]:
                raise ConfigError(f"{name} range out of order: {list(pair)}")
        if self.ndim not in (2, 3):
            raise ConfigError("ndim must be 2 or 3")
        if self.gamma[0] <= 0:
            raise ConfigError("gamma exponents must be positive")
        if self.bias_drop_pct[1] > 100:
            raise ConfigError("bias drop above 100% would produce negative "
                              "intensities")
        if self.downsample_factor[0] < 1:
            raise ConfigError("downsampling factors must be >= 1")
        if self.warp_control_points[0] < 2 \
                or self.bias_control_points[0] < 2:
            raise ConfigError("control-point counts must be >= 2")
        if self.label_output not in ("full", "cropped"):
            raise ConfigError("label_output must be 'full' or 'cropped'")
        if self.warp_noise_kind not in ("value", "smoothed", "perlin",
                                        "fractal"):
            raise ConfigError(f"unknown noise kind {self.warp_noise_kind!r}")
        if self.bias_variant not in ("normalized-drop", "exp-gaussian"):
            raise ConfigError(f"unknown bias variant {self.bias_variant!r}")
        if self.downsample_interp not in ("linear", "nearest"):
            raise ConfigError("downsample_interp must be linear or nearest")
        if self.svf_steps < 1:
            raise ConfigError("svf_steps must be >= 1")
        vs = self.voxel_size_mm
        if isinstance(vs, (int, float)):
            vs = (float(vs),) * self.ndim
        vs = tuple(float(v) for v in vs)
        if len(vs) != self.ndim or any(v <= 0 for v in vs):
            raise ConfigError(f"voxel_size_mm {vs} does not match "
                              f"ndim {self.ndim}")
        object.__setattr__(self, "voxel_size_mm", vs)
        for stage in STAGES_WITH_PROBABILITY:
            p = getattr(self, f"prob_{stage}")
            if not 0 <= p <= 1:
                raise ConfigError(f"probability for {stage} must be in "
                                  f"[0, 1], got {p}")
        object.__setattr__(self, "brain_labels",
                           tuple(int(b) for b in self.brain_labels))
        object.__setattr__(self, "lut_ties",
                           tuple(tuple(int(m) for m in g)
                                 for g in self.lut_ties))
        for name in RANGE_FIELDS + ("clear_slices",):
            object.__setattr__(self, name, tuple(getattr(self, name)))


def default_config() -> SynthesisConfig:
    """The starter-table defaults, field for field."""
    return SynthesisConfig()


def max_effect_config(cfg: SynthesisConfig, stage: str) -> SynthesisConfig:
    """Pin one stage's range to (b, b) to preview its strongest effect."""
    if stage not in MAX_EFFECT_STAGES:
        raise ConfigError(
            f"unknown stage {stage!r}; expected one of "
            f"{sorted(MAX_EFFECT_STAGES)}")
    name = MAX_EFFECT_STAGES[stage]
    a, b = getattr(cfg, name)
    return dataclasses.replace(cfg, **{name: (b, b)})


def _to_document(cfg: SynthesisConfig) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "ndim": cfg.ndim,
        "voxel_size_mm": [float(v) for v in cfg.voxel_size_mm],
        "ranges": {name: [_plain(v) for v in getattr(cfg, name)]
                   for name in RANGE_FIELDS},
        "structure": {name: _plain(getattr(cfg, name))
                      for name in STRUCTURE_FIELDS},
        "probabilities": {stage: float(getattr(cfg, f"prob_{stage}"))
                          for stage in STAGES_WITH_PROBABILITY},
    }
    return doc


def _plain(v):
    if isinstance(v, tuple):
        return [_plain(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    return v


def serialize_config(cfg: SynthesisConfig) -> str:
    return yaml.safe_dump(_to_document(cfg), sort_keys=False,
                          default_flow_style=None)


def parse_config(text: str) -> SynthesisConfig:
    """Parse and validate a config document; omitted fields take defaults."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a mapping")
    return config_from_document(doc)


def config_from_document(doc: dict) -> SynthesisConfig:
    allowed_top = {"schema_version", "ndim", "voxel_size_mm", "ranges",
                   "structure", "probabilities"}
    unknown = set(doc) - allowed_top
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version}")
    kwargs = {}
    if "ndim" in doc:
        kwargs["ndim"] = doc["ndim"]
    if "voxel_size_mm" in doc:
        vs = doc["voxel_size_mm"]
        kwargs["voxel_size_mm"] = tuple(vs) if isinstance(vs, list) else vs
    ranges = doc.get("ranges", {}) or {}
    unknown = set(ranges) - set(RANGE_FIELDS)
    if unknown:
        raise ConfigError(f"unknown range keys: {sorted(unknown)}; check "
                          "the unit suffix in the key name")
    for name, pair in ranges.items():
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise ConfigError(f"range {name} must be [a, b]")
        kwargs[name] = tuple(pair)
    structure = doc.get("structure", {}) or {}
    unknown = set(structure) - set(STRUCTURE_FIELDS)
    if unknown:
        raise ConfigError(f"unknown structure keys: {sorted(unknown)}")
    for name, value in structure.items():
        if name in ("clear_slices", "brain_labels", "lut_ties") \
                and isinstance(value, list):
            value = tuple(tuple(v) if isinstance(v, list) else v
                          for v in value)
        kwargs[name] = value
    probs = doc.get("probabilities", {}) or {}
    unknown = set(probs) - set(STAGES_WITH_PROBABILITY)
    if unknown:
        raise ConfigError(f"unknown probability keys: {sorted(unknown)}")
    for stage, p in probs.items():
        kwargs[f"prob_{stage}"] = p
    try:
        return SynthesisConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
