"""Smooth random field generators: value, smoothed, Perlin, fractal.

All generators are deterministic in (shape, spec, stream): the same
inputs replay bit-identically, and distinct streams are independent.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .errors import ConfigError
from .fields import (ScalarField, VectorField, gaussian_kernel,
                     minmax_normalize, resample_linear, separable_convolve)
from .rng import RngStream

KINDS = ("value", "smoothed", "perlin", "fractal")


@dataclass(frozen=True)
class NoiseSpec:
    """Sampling bounds for one noise field.

    grid bounds apply to value noise (low-res field size, inclusive),
    control-point bounds to Perlin/fractal lattices, smoothing_mm and
    amplitude_sd to explicitly smoothed noise.
    """

    kind: str = "perlin"
    grid_min: int = 1
    grid_max: int = 8
    control_points_min: int = 2
    control_points_max: int = 16
    smoothing_mm: tuple = (0.0, 0.0)
    amplitude_sd: tuple = (1.0, 1.0)
    octaves: int = 1
    quintic_fade: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown noise kind {self.kind!r}")
        if self.grid_min < 1 or self.grid_max < self.grid_min:
            raise ConfigError("value-noise grid bounds must satisfy "
                              "1 <= min <= max")
        if self.control_points_min < 2:
            raise ConfigError("Perlin lattices need at least 2 control "
                              "points per axis")
        if self.control_points_max < self.control_points_min:
            raise ConfigError("control-point bounds out of order")
        if self.smoothing_mm[0] > self.smoothing_mm[1] \
                or self.smoothing_mm[0] < 0:
            raise ConfigError("smoothing bounds out of order")
        if self.octaves < 1:
            raise ConfigError("octaves must be >= 1")


def value_noise(shape, spec: NoiseSpec, rng: RngStream,
                voxel_size=None) -> ScalarField:
    """Linearly upsampled low-resolution uniform field, min-max in [0, 1]."""
    gen = rng.generator()
    sizes = []
    for n in shape:
        hi = spec.grid_max
        if hi > n:
            warnings.warn(f"value-noise grid bound {hi} exceeds extent {n}; "
                          "clamping", stacklevel=2)
            hi = n
        lo = min(spec.grid_min, hi)
        sizes.append(int(gen.integers(lo, hi + 1)))
    low = gen.random(tuple(sizes))
    if len(shape) != len(sizes):
        raise ConfigError("shape/grid rank mismatch")
    field = ScalarField(low, voxel_size=None)
    up = resample_linear(field, tuple(shape))
    out = minmax_normalize(up)
    return ScalarField(out.values, voxel_size, out.degenerate)


def smoothed_noise(shape, spec: NoiseSpec, rng: RngStream,
                   voxel_size=None, normalize=True) -> ScalarField:
    """Full-resolution Gaussian noise, separably smoothed and rescaled.

    The rescale factor max|F| / max|F_smoothed| restores the raw field's
    maximum strength. With normalize=False the rescaled field is returned
    without the final min-max mapping to [0, 1].
    """
    gen = rng.generator()
    sd = gen.uniform(*spec.amplitude_sd)
    raw = gen.normal(0.0, sd if sd > 0 else 1.0, tuple(shape))
    f = ScalarField(raw, voxel_size)
    ks = [gaussian_kernel(gen.uniform(*spec.smoothing_mm),
                          f.voxel_size[i], axis=i)
          for i in range(f.ndim)]
    smooth = separable_convolve(f, ks)
    peak = np.abs(smooth.values).max()
    alpha = np.abs(raw).max() / peak if peak > 0 else 1.0
    rescaled = smooth.with_values(smooth.values * alpha)
    return minmax_normalize(rescaled) if normalize else rescaled


def _unit_gradients(gen, lattice_shape, ndim):
    g = gen.normal(size=tuple(lattice_shape) + (ndim,))
    norm = np.sqrt((g ** 2).sum(axis=-1, keepdims=True))
    norm[norm == 0] = 1.0
    return g / norm


def perlin_noise(shape, spec: NoiseSpec, rng: RngStream,
                 voxel_size=None) -> ScalarField:
    """Gradient noise on a random lattice; raw values lie in [-1, 1].

    Every lattice control point evaluates to exactly 0: the support
    vector to the dominant corner vanishes there while all other corners
    carry zero interpolation weight.
    """
    gen = rng.generator()
    ndim = len(shape)
    cps = [int(gen.integers(spec.control_points_min,
                            spec.control_points_max + 1))
           for _ in range(ndim)]
    grads = _unit_gradients(gen, cps, ndim)
    values = kernels.perlin_nd(tuple(shape), grads,
                               quintic=spec.quintic_fade)
    return ScalarField(values, voxel_size)


def fractal_noise(shape, spec: NoiseSpec, rng: RngStream,
                  voxel_size=None) -> ScalarField:
    """Octaves of Perlin noise, weights inversely proportional to frequency.

    Octave o uses base_control_points * 2**o control points and weight
    2**-o; weights are renormalized over the octaves kept. Octaves whose
    lattice would outnumber the voxels along any axis are dropped with a
    warning. The combined field is min-max normalized to [0, 1].
    """
    gen = rng.generator()
    ndim = len(shape)
    base = [int(gen.integers(spec.control_points_min,
                             spec.control_points_max + 1))
            for _ in range(ndim)]
    total = np.zeros(tuple(shape))
    weights = []
    parts = []
    for o in range(spec.octaves):
        cps = [c * 2 ** o for c in base]
        if any(c > n for c, n in zip(cps, shape)):
            warnings.warn(f"dropping fractal octave {o}: {cps} control "
                          f"points exceed the grid {tuple(shape)}",
                          stacklevel=2)
            continue
        sub = rng.child(o).generator()
        grads = _unit_gradients(sub, cps, ndim)
        parts.append(kernels.perlin_nd(tuple(shape), grads,
                                       quintic=spec.quintic_fade))
        weights.append(2.0 ** -o)
    if not parts:
        raise ConfigError("all fractal octaves exceed the grid")
    weights = np.array(weights) / np.sum(weights)
    for w, p in zip(weights, parts):
        total += w * p
    return minmax_normalize(ScalarField(total, voxel_size))


def fractal_octave_weights(octaves: int) -> np.ndarray:
    """Normalized 1/frequency weights for a given octave count."""
    w = 2.0 ** -np.arange(octaves)
    return w / w.sum()


_GENERATORS = {
    "value": value_noise,
    "smoothed": smoothed_noise,
    "perlin": perlin_noise,
    "fractal": fractal_noise,
}


def scalar_noise(shape, spec: NoiseSpec, rng: RngStream,
                 voxel_size=None) -> ScalarField:
    """Dispatch on spec.kind."""
    return _GENERATORS[spec.kind](shape, spec, rng, voxel_size)


def vector_noise(shape, spec: NoiseSpec, rng: RngStream,
                 voxel_size=None) -> VectorField:
    """N independent scalar components, each min-max normalized to [0, 1]."""
    ndim = len(shape)
    comps = []
    for i in range(ndim):
        f = scalar_noise(shape, spec, rng.child(i), voxel_size)
        comps.append(minmax_normalize(f).values)
    return VectorField(np.stack(comps), voxel_size)
