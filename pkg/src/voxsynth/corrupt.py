"""The randomized corruption chain.

Stage order is fixed by the pipeline: bias -> blur -> noise -> gamma ->
downsample -> mask (bias and blur must precede noise so the noise floor
stays uncorrelated with smoothness; gamma renormalizes after noise).
Each stage function is pure: it draws its parameters from the given
stream and returns the corrupted field plus the sampled values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .fields import (LabelVolume, ScalarField, gaussian_kernel,
                     minmax_normalize, resample_linear, resample_nearest,
                     separable_convolve)
from .noise import NoiseSpec, perlin_noise
from .rng import RngStream
from .spatial import CropMask


@dataclass(frozen=True)
class CorruptionParams:
    """Sampling ranges for every corruption stage.

    bias_drop and noise_sd are fractions of the unit intensity range
    (the starter table lists them as percentages). Real-valued
    downsampling factors are drawn from a continuous uniform.
    """

    bias_drop: tuple = (0.0, 0.5)
    bias_control_points: tuple = (2, 4)
    bias_variant: str = "normalized-drop"
    bias_exp_sd: float = 0.33
    blur_sd_mm: tuple = (0.0, 2.0)
    noise_sd: tuple = (0.0, 0.1)
    gamma: tuple = (0.5, 1.5)
    downsample_factor: tuple = (1.0, 4.0)
    downsample_interp: str = "linear"
    downsample_labels: bool = False
    clear_slices: tuple = (0, 0)
    quintic_fade: bool = False

    def __post_init__(self):
        for name in ("bias_drop", "blur_sd_mm", "noise_sd", "gamma",
                     "downsample_factor", "clear_slices",
                     "bias_control_points"):
            a, b = getattr(self, name)
            if a > b:
                raise ConfigError(f"{name} range out of order: ({a}, {b})")
        if self.bias_drop[1] > 1:
            raise ConfigError("bias drop > 1 would produce negative "
                              "intensities")
        if self.gamma[0] <= 0:
            raise ConfigError("gamma exponents must be positive")
        if self.downsample_factor[0] < 1:
            raise ConfigError("downsampling factors must be >= 1")
        if self.bias_variant not in ("normalized-drop", "exp-gaussian"):
            raise ConfigError(f"unknown bias variant {self.bias_variant!r}")
        if self.downsample_interp not in ("linear", "nearest"):
            raise ConfigError("downsample_interp must be linear or nearest")


def bias_multiplier_field(shape, params: CorruptionParams, rng: RngStream,
                          voxel_size=None):
    """The multiplicative bias field and its sampled parameters.

    normalized-drop: 1 - drop * B where B is min-max-normalized smooth
    noise, so the multiplier lies in [1 - drop, 1]. exp-gaussian: a
    low-resolution Gaussian field of the configured SD, exponentiated
    voxel-wise and linearly upsampled; positive but asymmetric.
    """
    gen = rng.generator()
    cp_lo, cp_hi = params.bias_control_points
    if params.bias_variant == "normalized-drop":
        drop = float(gen.uniform(*params.bias_drop))
        spec = NoiseSpec(kind="perlin", control_points_min=int(cp_lo),
                         control_points_max=int(cp_hi),
                         quintic_fade=params.quintic_fade)
        hat = minmax_normalize(
            perlin_noise(shape, spec, rng.child(1), voxel_size))
        multiplier = 1.0 - drop * hat.values
        return multiplier, {"variant": "normalized-drop", "drop": drop}
    sizes = [int(gen.integers(cp_lo, cp_hi + 1)) for _ in shape]
    low = gen.normal(0.0, params.bias_exp_sd, tuple(sizes))
    up = resample_linear(ScalarField(low), tuple(shape))
    return np.exp(up.values), {"variant": "exp-gaussian",
                               "sd": params.bias_exp_sd,
                               "grid": sizes}


def apply_bias(x: ScalarField, params: CorruptionParams, rng: RngStream):
    """Multiply by a smooth intensity non-uniformity field."""
    multiplier, info = bias_multiplier_field(x.shape, params, rng,
                                             x.voxel_size)
    return x.with_values(x.values * multiplier.astype(x.values.dtype)), info


def apply_blur(x: ScalarField, params: CorruptionParams, rng: RngStream):
    """Separable Gaussian blur with per-axis SD ~ U(a, b) mm."""
    gen = rng.generator()
    sds = [float(gen.uniform(*params.blur_sd_mm)) for _ in range(x.ndim)]
    ks = [gaussian_kernel(sd, x.voxel_size[i], axis=i)
          for i, sd in enumerate(sds)]
    return separable_convolve(x, ks), {"blur_sd_mm": sds}


def add_noise(x: ScalarField, params: CorruptionParams, rng: RngStream):
    """Voxel-wise i.i.d. Gaussian perturbation; SD is a unit-range fraction."""
    gen = rng.generator()
    sd = float(gen.uniform(*params.noise_sd))
    if sd == 0:
        return x, {"noise_sd": 0.0}
    noise = gen.normal(0.0, sd, x.shape).astype(x.values.dtype)
    return x.with_values(x.values + noise), {"noise_sd": sd}


def apply_gamma(x: ScalarField, params: CorruptionParams, rng: RngStream):
    """Min-max renormalize to [0, 1], then raise to a global exponent."""
    gen = rng.generator()
    gamma = float(gen.uniform(*params.gamma))
    normalized = minmax_normalize(x)
    return normalized.with_values(normalized.values ** gamma), \
        {"gamma": gamma}


def downsample_upsample(x: ScalarField, s_x: LabelVolume,
                        params: CorruptionParams, rng: RngStream):
    """Round-trip through a lower resolution drawn per axis.

    The image uses linear or nearest interpolation per config; the label
    map, when configured for downsampling, uses nearest both ways so no
    intermediate label values appear. Output shapes equal input shapes.
    """
    gen = rng.generator()
    factors = [float(gen.uniform(*params.downsample_factor))
               for _ in range(x.ndim)]
    low = tuple(max(1, int(np.floor(n / d + 0.5)))
                for n, d in zip(x.shape, factors))
    info = {"downsample_factor": factors, "intermediate_shape": list(low)}
    if low == x.shape:
        return x, s_x, info
    if params.downsample_interp == "linear":
        img = resample_linear(resample_linear(x, low), x.shape)
    else:
        img = resample_nearest(resample_nearest(x, low), x.shape)
    labels = s_x
    if params.downsample_labels and s_x is not None:
        labels = resample_nearest(resample_nearest(s_x, low), s_x.shape)
    return img, labels, info


def apply_mask(x: ScalarField, m: CropMask) -> ScalarField:
    """Zero the image exactly where the crop mask is zero."""
    if m.mask.shape != x.shape:
        raise ValueError(f"mask shape {m.mask.shape} != image {x.shape}")
    return x.with_values(x.values * m.mask.values.astype(x.values.dtype))


def clear_slices(x: ScalarField, params: CorruptionParams, rng: RngStream):
    """Zero k full axis-aligned planes at random positions."""
    gen = rng.generator()
    lo, hi = params.clear_slices
    count = int(gen.integers(int(lo), int(hi) + 1))
    if count == 0:
        return x, {"cleared_slices": [], "axis": None}
    axis = int(gen.integers(0, x.ndim))
    count = min(count, x.shape[axis])
    positions = sorted(int(p) for p in
                       gen.choice(x.shape[axis], size=count, replace=False))
    values = x.values.copy()
    sl = [slice(None)] * x.ndim
    for p in positions:
        sl[axis] = p
        values[tuple(sl)] = 0
    return x.with_values(values), {"cleared_slices": positions, "axis": axis}


def simulate_skullstrip(x: ScalarField, s_x: LabelVolume,
                        brain_labels) -> ScalarField:
    """Zero every voxel whose label is not a brain label."""
    brain = np.asarray(sorted(set(int(b) for b in brain_labels)))
    if brain.size == 0:
        raise ConfigError("skull-strip simulation needs at least one "
                          "brain label")
    keep = np.isin(s_x.labels, brain)
    return x.with_values(np.where(keep, x.values, 0).astype(x.values.dtype))
