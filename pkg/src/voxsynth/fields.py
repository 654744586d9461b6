"""N-D grid containers and the resampling/convolution primitives.

Conventions pinned here and relied on everywhere else:

* convolution uses replicate-edge padding;
* resampling is corner-aligned: the first and last source grid points map
  to the first and last target points along each axis;
* nearest-neighbor ties round half toward the lower index;
* sigma-like parameters are given in mm and converted to voxels with the
  field's voxel size.

All containers are treated as immutable after construction and every
operation is a pure function.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .errors import ConfigError

Shape = tuple  # positive extents, one per axis; N in {2, 3}


def _check_shape(shape):
    if len(shape) not in (2, 3):
        raise ConfigError(f"only 2-D and 3-D grids are supported, got {shape}")
    if any(int(n) < 1 for n in shape):
        raise ConfigError(f"extents must be >= 1, got {shape}")
    return tuple(int(n) for n in shape)


def _as_voxel_size(voxel_size, ndim):
    if voxel_size is None:
        voxel_size = 1.0
    if np.isscalar(voxel_size):
        voxel_size = (float(voxel_size),) * ndim
    voxel_size = tuple(float(v) for v in voxel_size)
    if len(voxel_size) != ndim or any(v <= 0 for v in voxel_size):
        raise ConfigError(f"bad voxel size {voxel_size} for {ndim}-D grid")
    return voxel_size


@dataclass(frozen=True)
class ScalarField:
    """Real-valued grid with voxel-size metadata (mm per axis)."""

    values: np.ndarray
    voxel_size: tuple = None
    degenerate: bool = False

    def __post_init__(self):
        shape = _check_shape(self.values.shape)
        object.__setattr__(self, "voxel_size",
                           _as_voxel_size(self.voxel_size, len(shape)))
        if not np.issubdtype(self.values.dtype, np.floating):
            object.__setattr__(self, "values", self.values.astype(np.float64))
        if not np.all(np.isfinite(self.values)):
            raise ValueError("scalar field contains non-finite values")

    @property
    def shape(self):
        return self.values.shape

    @property
    def ndim(self):
        return self.values.ndim

    def with_values(self, values, degenerate=None):
        deg = self.degenerate if degenerate is None else degenerate
        return ScalarField(values, self.voxel_size, deg)


@dataclass(frozen=True)
class VectorField:
    """N components per voxel, stored as values[(component, *grid)]."""

    values: np.ndarray
    voxel_size: tuple = None

    def __post_init__(self):
        shape = _check_shape(self.values.shape[1:])
        if self.values.shape[0] != len(shape):
            raise ValueError("component count must equal dimensionality")
        object.__setattr__(self, "voxel_size",
                           _as_voxel_size(self.voxel_size, len(shape)))
        if not np.all(np.isfinite(self.values)):
            raise ValueError("vector field contains non-finite values")

    @property
    def shape(self):
        return self.values.shape[1:]

    @property
    def ndim(self):
        return len(self.shape)


@dataclass(frozen=True)
class LabelVolume:
    """Zero-based integer anatomical labels plus the label count J."""

    labels: np.ndarray
    label_count: int
    voxel_size: tuple = None

    def __post_init__(self):
        shape = _check_shape(self.labels.shape)
        object.__setattr__(self, "voxel_size",
                           _as_voxel_size(self.voxel_size, len(shape)))
        if not np.issubdtype(self.labels.dtype, np.integer):
            raise ValueError("labels must be integer-valued")
        if self.label_count < 2:
            raise ValueError("label volumes need at least 2 labels (J >= 2)")
        if self.labels.min() < 0 or self.labels.max() >= self.label_count:
            raise ValueError("labels must lie in [0, J-1]")

    @property
    def shape(self):
        return self.labels.shape

    @property
    def ndim(self):
        return self.labels.ndim


@dataclass(frozen=True)
class Kernel1D:
    """Odd-length, normalized non-negative taps for one axis."""

    taps: np.ndarray
    axis: int = 0

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.float64)
        object.__setattr__(self, "taps", taps)
        if taps.ndim != 1 or len(taps) % 2 == 0:
            raise ValueError("kernel taps must be a 1-D odd-length array")
        if taps.min() < 0:
            raise ValueError("kernel taps must be non-negative")
        if abs(taps.sum() - 1.0) > 1e-6:
            raise ValueError("kernel taps must sum to 1 within 1e-6")


def minmax_normalize(f: ScalarField) -> ScalarField:
    """Affinely rescale to [0, 1]; constant input yields zeros + flag."""
    lo = float(f.values.min())
    hi = float(f.values.max())
    if hi == lo:
        return f.with_values(np.zeros_like(f.values), degenerate=True)
    out = (f.values - lo) / (hi - lo)
    return f.with_values(out, degenerate=False)


def gaussian_kernel(sigma: float, voxel_size: float = 1.0,
                    axis: int = 0) -> Kernel1D:
    """Normalized Gaussian taps; sigma in mm, length round(3*sigma_vox)*2+1."""
    if sigma < 0:
        raise ConfigError(f"gaussian kernel sigma must be >= 0, got {sigma}")
    sigma_vox = sigma / float(voxel_size)
    half = int(np.floor(3.0 * sigma_vox + 0.5))
    if half == 0 or sigma_vox == 0:
        return Kernel1D(np.array([1.0]), axis)
    offsets = np.arange(-half, half + 1, dtype=np.float64)
    taps = np.exp(-0.5 * (offsets / sigma_vox) ** 2)
    return Kernel1D(taps / taps.sum(), axis)


def separable_convolve(f: ScalarField, kernels_1d) -> ScalarField:
    """Convolve with one 1-D kernel per axis (replicate-edge padding).

    Equivalent to a full N-D convolution with the outer-product kernel.
    """
    out = f.values
    for k in kernels_1d:
        n = f.shape[k.axis]
        if len(k.taps) > 2 * n:
            raise ValueError(
                f"kernel of length {len(k.taps)} has degenerate support on "
                f"axis {k.axis} of extent {n}")
        if len(k.taps) == 1 and k.taps[0] == 1.0:
            continue
        moved = np.moveaxis(out, k.axis, -1)
        rows = np.ascontiguousarray(moved).reshape(-1, n)
        rows = kernels.conv1d_rows(rows, k.taps)
        out = np.moveaxis(rows.reshape(moved.shape), -1, k.axis)
    return f.with_values(np.ascontiguousarray(out))


def _axis_coords(n_src: int, n_tgt: int) -> np.ndarray:
    # corner-aligned: first/last target points hit first/last source points
    if n_tgt == 1 or n_src == 1:
        return np.zeros(n_tgt)
    return np.arange(n_tgt) * ((n_src - 1) / (n_tgt - 1))


def resample_linear(f: ScalarField, target: Shape) -> ScalarField:
    """Multilinear, corner-aligned resampling to the target shape."""
    target = _check_shape(target)
    out = f.values
    for axis, m in enumerate(target):
        n = out.shape[axis]
        if m == n:
            continue
        c = _axis_coords(n, m)
        lo = np.minimum(np.floor(c).astype(np.intp), max(n - 2, 0))
        frac = c - lo
        hi = np.minimum(lo + 1, n - 1)
        a = np.take(out, lo, axis=axis)
        b = np.take(out, hi, axis=axis)
        w = frac.reshape([-1 if i == axis else 1 for i in range(out.ndim)])
        out = a * (1.0 - w) + b * w
    return f.with_values(out.astype(f.values.dtype))


def _nearest_indices(n_src: int, n_tgt: int) -> np.ndarray:
    c = _axis_coords(n_src, n_tgt)
    # ties round half toward the lower index
    return np.clip(np.ceil(c - 0.5).astype(np.intp), 0, n_src - 1)


def resample_nearest(v, target: Shape):
    """Nearest-grid-point resampling; never invents new values."""
    target = _check_shape(target)
    data = v.labels if isinstance(v, LabelVolume) else v.values
    for axis, m in enumerate(target):
        if m == data.shape[axis]:
            continue
        idx = _nearest_indices(data.shape[axis], m)
        data = np.take(data, idx, axis=axis)
    if isinstance(v, LabelVolume):
        return LabelVolume(np.ascontiguousarray(data), v.label_count,
                           v.voxel_size)
    return v.with_values(np.ascontiguousarray(data))
