"""End-to-end sample generation: (image, labels) = g(label map, seed).

The seed splits into one independent sub-stream per stage, so toggling
or re-ranging one stage never perturbs another stage's draws. Each gated
stage flips its own coin first, then draws parameters; the full set of
sampled values lands in the provenance record.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .config import SynthesisConfig, default_config  # noqa: F401
from .corrupt import (CorruptionParams, add_noise, apply_bias, apply_blur,
                      apply_gamma, apply_mask, clear_slices,
                      downsample_upsample, simulate_skullstrip)
from .errors import ConfigError, GenerationError
from .fields import LabelVolume, ScalarField
from .noise import NoiseSpec
from .rng import RngStream
from .spatial import (compose, integrate_svf, sample_affine, sample_crop_mask,
                      sample_elastic, warp_labels)
from .synthesis import render_mean_image, sample_lut

# fixed stage order; bias and blur precede noise, gamma follows noise,
# the crop mask multiplies last
STAGES = ("spatial", "crop-mask", "mean-image", "bias", "blur", "noise",
          "gamma", "downsample", "mask", "clear-slices", "skullstrip")

# preview batches default to the middle of the 20-30 guidance
DEFAULT_PREVIEW_COUNT = 25


@dataclass(frozen=True)
class SamplePair:
    """One generated training pair plus everything needed to replay it."""

    image: ScalarField
    labels: LabelVolume
    seed: int
    provenance: dict

    def image_hash(self) -> str:
        return hashlib.sha256(
            np.ascontiguousarray(self.image.values).tobytes()).hexdigest()


def _corruption_params(cfg: SynthesisConfig) -> CorruptionParams:
    return CorruptionParams(
        bias_drop=(cfg.bias_drop_pct[0] / 100.0,
                   cfg.bias_drop_pct[1] / 100.0),
        bias_control_points=cfg.bias_control_points,
        bias_variant=cfg.bias_variant,
        bias_exp_sd=cfg.bias_exp_sd,
        blur_sd_mm=cfg.blur_sd_mm,
        noise_sd=(cfg.noise_sd_pct[0] / 100.0, cfg.noise_sd_pct[1] / 100.0),
        gamma=cfg.gamma,
        downsample_factor=cfg.downsample_factor,
        downsample_interp=cfg.downsample_interp,
        downsample_labels=cfg.downsample_labels,
        clear_slices=cfg.clear_slices,
        quintic_fade=cfg.quintic_fade,
    )


def _warp_noise_spec(cfg: SynthesisConfig) -> NoiseSpec:
    return NoiseSpec(kind=cfg.warp_noise_kind,
                     control_points_min=int(cfg.warp_control_points[0]),
                     control_points_max=int(cfg.warp_control_points[1]),
                     grid_max=int(cfg.warp_control_points[1]),
                     octaves=4 if cfg.warp_noise_kind == "fractal" else 1,
                     quintic_fade=cfg.quintic_fade)


def _gate(stream: RngStream, probability: float) -> bool:
    return bool(stream.child_named("gate").generator().random()
                < probability)


def generate(s: LabelVolume, cfg: SynthesisConfig, seed: int,
             stop_after: str | None = None) -> SamplePair:
    """Run the full generative chain deterministically in (s, cfg, seed).

    stop_after names a stage from STAGES to truncate the chain for
    previews (e.g. "mean-image" returns the noise-free lookup render).
    """
    if stop_after is not None and stop_after not in STAGES:
        raise ConfigError(f"unknown stage {stop_after!r}; expected one "
                          f"of {list(STAGES)}")
    if cfg.ndim != s.ndim:
        raise ConfigError(f"config is {cfg.ndim}-D but label map is "
                          f"{s.ndim}-D")
    vs = cfg.voxel_size_mm
    root = RngStream(seed)
    streams = {name: root.child_named(name) for name in STAGES}
    prov: dict = {"seed": int(seed), "stages": {}}
    params = _corruption_params(cfg)

    def done(image, labels):
        if cfg.label_output == "cropped":
            cropped = np.where(mask.mask.values > 0, labels.labels, 0) \
                if mask is not None else labels.labels
            labels = LabelVolume(cropped.astype(labels.labels.dtype),
                                 labels.label_count, vs)
        img32 = image.with_values(
            np.ascontiguousarray(image.values, dtype=np.float32))
        return SamplePair(img32, labels, int(seed), prov)

    mask = None
    try:
        # spatial: affine + (SVF or elastic) deformation, one resampling pass
        stage = "spatial"
        affine = sample_affine(
            s.shape, vs, cfg.translation_mm, cfg.rotation_deg,
            (cfg.scaling_pct[0] / 100.0, cfg.scaling_pct[1] / 100.0),
            (cfg.shear_pct[0] / 100.0, cfg.shear_pct[1] / 100.0),
            streams[stage].child_named("affine"))
        elastic = sample_elastic(s.shape, _warp_noise_spec(cfg),
                                 cfg.warp_strength_mm,
                                 streams[stage].child_named("warp"), vs)
        if cfg.use_svf and elastic.strength > 0:
            phi = integrate_svf(elastic.displacement, cfg.svf_steps)
        else:
            phi = elastic
        total = compose(phi, affine)
        s_x = warp_labels(s, total)
        prov["stages"][stage] = {"affine": affine.params,
                                 "warp_strength_mm": elastic.strength,
                                 "warp_model": phi.provenance}
        if stop_after == stage:
            return done(ScalarField(s_x.labels.astype(np.float32), vs), s_x)

        # crop mask: drawn once, multiplied in at the end
        stage = "crop-mask"
        applied = _gate(streams[stage], cfg.prob_crop)
        bounds = (cfg.crop_proportion_pct[0] / 100.0,
                  cfg.crop_proportion_pct[1] / 100.0) if applied \
            else (0.0, 0.0)
        mask = sample_crop_mask(s.shape, bounds,
                                streams[stage].child_named("draw"), vs,
                                cfg.crop_multi_axis)
        prov["stages"][stage] = {"applied": applied,
                                 "proportion": mask.proportion,
                                 "axes": list(mask.axes),
                                 "sides": list(mask.sides)}
        if stop_after == stage:
            return done(mask.mask, s_x)

        # per-label intensity lookup
        stage = "mean-image"
        lut = sample_lut(s.label_count, streams[stage],
                         forced=cfg.lut_forced, ties=cfg.lut_ties,
                         bounds=cfg.intensity_mean)
        x = render_mean_image(s_x, lut)
        x = x.with_values(x.values.astype(np.float32))
        prov["stages"][stage] = {"lut": [float(v) for v in lut.values]}
        if stop_after == stage:
            return done(x, s_x)

        stage = "bias"
        if _gate(streams[stage], cfg.prob_bias):
            x, info = apply_bias(x, params, streams[stage].child_named("draw"))
            prov["stages"][stage] = {"applied": True, **info}
        else:
            prov["stages"][stage] = {"applied": False}
        if stop_after == stage:
            return done(x, s_x)

        stage = "blur"
        if _gate(streams[stage], cfg.prob_blur):
            x, info = apply_blur(x, params, streams[stage].child_named("draw"))
            prov["stages"][stage] = {"applied": True, **info}
        else:
            prov["stages"][stage] = {"applied": False}
        if stop_after == stage:
            return done(x, s_x)

        stage = "noise"
        if _gate(streams[stage], cfg.prob_noise):
            x, info = add_noise(x, params, streams[stage].child_named("draw"))
            prov["stages"][stage] = {"applied": True, **info}
        else:
            prov["stages"][stage] = {"applied": False}
        if stop_after == stage:
            return done(x, s_x)

        stage = "gamma"
        if _gate(streams[stage], cfg.prob_gamma):
            x, info = apply_gamma(x, params,
                                  streams[stage].child_named("draw"))
            prov["stages"][stage] = {"applied": True, **info}
        else:
            prov["stages"][stage] = {"applied": False}
        if stop_after == stage:
            return done(x, s_x)

        stage = "downsample"
        if _gate(streams[stage], cfg.prob_downsample):
            x, s_x, info = downsample_upsample(
                x, s_x, params, streams[stage].child_named("draw"))
            prov["stages"][stage] = {"applied": True, **info}
        else:
            prov["stages"][stage] = {"applied": False}
        if stop_after == stage:
            return done(x, s_x)

        stage = "mask"
        x = apply_mask(x, mask)
        prov["stages"][stage] = {"applied": True}
        if stop_after == stage:
            return done(x, s_x)

        stage = "clear-slices"
        if cfg.clear_slices[1] > 0 and _gate(streams[stage],
                                             cfg.prob_clear_slices):
            x, info = clear_slices(x, params,
                                   streams[stage].child_named("draw"))
            prov["stages"][stage] = {"applied": True, **info}
        else:
            prov["stages"][stage] = {"applied": False}
        if stop_after == stage:
            return done(x, s_x)

        stage = "skullstrip"
        if cfg.brain_labels and _gate(streams[stage], cfg.prob_skullstrip):
            x = simulate_skullstrip(x, s_x, cfg.brain_labels)
            prov["stages"][stage] = {"applied": True,
                                     "brain_labels": list(cfg.brain_labels)}
        else:
            prov["stages"][stage] = {"applied": False}
        return done(x, s_x)
    except GenerationError:
        raise
    except Exception as exc:
        raise GenerationError(stage, str(exc), prov) from exc


def preview_batch(s: LabelVolume, cfg: SynthesisConfig,
                  count: int = DEFAULT_PREVIEW_COUNT, base_seed: int = 0):
    """Generate count pairs from consecutive seeds for visual QC.

    Per-sample failures do not abort the batch; they are returned as a
    seed -> error mapping alongside the successful pairs.
    """
    if count < 1:
        raise ConfigError("preview batches need count >= 1")
    pairs, failures = [], {}
    for seed in range(base_seed, base_seed + count):
        try:
            pairs.append(generate(s, cfg, seed))
        except GenerationError as exc:
            failures[seed] = str(exc)
    return pairs, failures


def qc_flags(pair: SamplePair, foreground_threshold: float = 0.01,
             max_fov_faces: int = 4) -> list:
    """Catalogue of common failure modes, checkable without eyeballing."""
    flags = []
    img = pair.image.values
    if not np.all(np.isfinite(img)):
        flags.append("non-finite")
    if not np.any(img):
        flags.append("empty-image")
    labels = pair.labels.labels
    fg = labels > 0
    if fg.mean() < foreground_threshold:
        flags.append("labels-out-of-fov")
    touched = 0
    for axis in range(labels.ndim):
        first = np.take(fg, 0, axis=axis)
        last = np.take(fg, -1, axis=axis)
        touched += int(first.any()) + int(last.any())
    if touched >= max_fov_faces:
        flags.append("anatomy-touching-fov")
    return flags
