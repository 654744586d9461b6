"""Random spatial augmentation: affine, elastic/SVF deformation, warping,
and partial-FOV crop masks.

Conventions (ranges in the config are symmetric, so these are free
choices, documented once here):

* transforms act on voxel coordinates; mm parameters are converted with
  the voxel size;
* the affine A maps output voxel coords to source coords (sampling
  convention), composed as T @ R @ Z @ E with rotation/scale/shear
  pivoting about the FOV center;
* rotations are intrinsic about the grid axes, applied as
  R = R_x(r_x) @ R_y(r_y) @ R_z(r_z), right-handed, degrees;
* shear matrices are upper-triangular with unit diagonal; the sampled
  percentage e maps to off-diagonal entries e - 1 (identity at 100%);
* a composed transform samples the displacement at the affinely mapped
  locations: G(M) = A(M) + d(A(M)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .errors import ConfigError, GenerationError
from .fields import LabelVolume, ScalarField, VectorField
from .noise import NoiseSpec, vector_noise
from .rng import RngStream


@dataclass(frozen=True)
class AffineTransform:
    """Homogeneous (N+1)x(N+1) transform plus its sampled parameters."""

    matrix: np.ndarray
    params: dict
    shape: tuple
    voxel_size: tuple

    @property
    def ndim(self):
        return self.matrix.shape[0] - 1

    def apply(self, coords):
        """Map a list of N coordinate arrays through the matrix."""
        ndim = self.ndim
        out = []
        for i in range(ndim):
            acc = np.full(coords[0].shape, self.matrix[i, ndim])
            for j in range(ndim):
                acc = acc + self.matrix[i, j] * coords[j]
            out.append(acc)
        return out


@dataclass(frozen=True)
class DeformationField:
    """Dense displacement (mm per component) with provenance."""

    displacement: VectorField
    provenance: str
    strength: float = 0.0

    @property
    def shape(self):
        return self.displacement.shape


@dataclass(frozen=True)
class CropMask:
    """Outer product of per-axis binary masks (Eq.-4 style broadcasting)."""

    mask: ScalarField
    factors: tuple
    proportion: float
    axes: tuple
    sides: tuple


def _identity_grid(shape):
    return [g.astype(np.float64) for g in
            np.meshgrid(*[np.arange(n) for n in shape], indexing="ij")]


def _translation(t_vox):
    n = len(t_vox)
    m = np.eye(n + 1)
    m[:n, n] = t_vox
    return m


def _rotation(angles_deg, ndim):
    if ndim == 2:
        a = math.radians(angles_deg[0])
        c, s = math.cos(a), math.sin(a)
        m = np.eye(3)
        m[:2, :2] = [[c, -s], [s, c]]
        return m
    m = np.eye(4)
    for axis, ang in enumerate(angles_deg):
        a = math.radians(ang)
        c, s = math.cos(a), math.sin(a)
        r = np.eye(4)
        rows = [i for i in range(3) if i != axis]
        r[rows[0], rows[0]] = c
        r[rows[0], rows[1]] = -s
        r[rows[1], rows[0]] = s
        r[rows[1], rows[1]] = c
        m = m @ r
    return m


def _scaling(factors, ndim):
    m = np.eye(ndim + 1)
    for i, z in enumerate(factors):
        m[i, i] = z
    return m


def _shear(factors, ndim):
    m = np.eye(ndim + 1)
    offdiag = [(i, j) for i in range(ndim) for j in range(i + 1, ndim)]
    for (i, j), e in zip(offdiag, factors):
        m[i, j] = e - 1.0
    return m


def sample_affine(shape, voxel_size, translation_mm, rotation_deg,
                  scaling, shear, rng: RngStream) -> AffineTransform:
    """Draw T.R.Z.E parameters and compose the homogeneous matrix.

    scaling and shear ranges are unitless factors (1.0 = identity). 3-D
    draws three parameters per family; 2-D uses two for translation and
    scaling and one for rotation and shear.
    """
    ndim = len(shape)
    for name, rng_pair in (("translation", translation_mm),
                           ("rotation", rotation_deg),
                           ("scaling", scaling), ("shear", shear)):
        if rng_pair[0] > rng_pair[1]:
            raise ConfigError(f"{name} range out of order: {rng_pair}")
    gen = rng.generator()
    n_rot = 3 if ndim == 3 else 1
    n_shear = 3 if ndim == 3 else 1
    t = [gen.uniform(*translation_mm) for _ in range(ndim)]
    r = [gen.uniform(*rotation_deg) for _ in range(n_rot)]
    z = [gen.uniform(*scaling) for _ in range(ndim)]
    e = [gen.uniform(*shear) for _ in range(n_shear)]
    t_vox = [ti / vi for ti, vi in zip(t, voxel_size)]

    center = np.array([(n - 1) / 2.0 for n in shape])
    c_fwd = _translation(center)
    c_bwd = _translation(-center)
    linear = _rotation(r, ndim) @ _scaling(z, ndim) @ _shear(e, ndim)
    matrix = _translation(t_vox) @ c_fwd @ linear @ c_bwd
    params = {"translation_mm": t, "rotation_deg": r,
              "scaling": z, "shear": e}
    return AffineTransform(matrix, params, tuple(shape),
                           tuple(float(v) for v in voxel_size))


def sample_elastic(shape, noise_spec: NoiseSpec, strength_mm, rng: RngStream,
                   voxel_size=None) -> DeformationField:
    """Random smooth displacement: strength * unit-normalized noise.

    Each component is min-max normalized to [0, 1] and remapped to
    [-1, 1] before scaling, so displacements can point both ways.
    """
    if strength_mm[0] > strength_mm[1] or strength_mm[0] < 0:
        raise ConfigError(f"warp strength range out of order: {strength_mm}")
    gen = rng.generator()
    strength = float(gen.uniform(*strength_mm))
    hat = vector_noise(shape, noise_spec, rng.child(1), voxel_size)
    disp = strength * (2.0 * hat.values - 1.0)
    return DeformationField(VectorField(disp, hat.voxel_size),
                            "elastic", strength)


def _sample_displacement(disp_vox, coords):
    """Sample each displacement component at coords, clamped to the grid."""
    clamped = [np.clip(c, 0, disp_vox.shape[1 + i] - 1)
               for i, c in enumerate(coords)]
    return [kernels.warp_linear(disp_vox[i], clamped)
            for i in range(disp_vox.shape[0])]


def integrate_svf(velocity: VectorField, steps: int = 7) -> DeformationField:
    """Exponentiate a stationary velocity field by scaling and squaring.

    The velocity (mm) is halved `steps` times, then the small displacement
    is composed with itself `steps` times: phi <- phi + phi o (id + phi).
    The result is diffeomorphic; a non-positive Jacobian determinant after
    integration raises with the minimum value (strength too large).
    """
    if steps < 1:
        raise ConfigError("SVF integration needs steps >= 1")
    vs = np.array(velocity.voxel_size)
    disp = velocity.values.astype(np.float64).copy()
    for i in range(len(vs)):
        disp[i] /= vs[i]
    disp /= 2.0 ** steps
    grid = _identity_grid(velocity.shape)
    for _ in range(steps):
        coords = [grid[i] + disp[i] for i in range(len(grid))]
        sampled = _sample_displacement(disp, coords)
        disp = np.stack([disp[i] + sampled[i] for i in range(len(grid))])
    det = kernels.jacobian_determinant(disp)
    interior = det[tuple(slice(1, -1) for _ in velocity.shape)]
    if interior.size and interior.min() <= 0:
        raise GenerationError(
            "svf-integration",
            f"non-positive Jacobian determinant (min {interior.min():.4g}); "
            "reduce the warp strength")
    disp_mm = disp.copy()
    for i in range(len(vs)):
        disp_mm[i] *= vs[i]
    return DeformationField(VectorField(disp_mm, velocity.voxel_size),
                            "svf-integrated",
                            float(np.abs(velocity.values).max()))


def jacobian_determinant(phi: DeformationField) -> np.ndarray:
    """Determinant of the Jacobian of id + displacement (voxel units)."""
    vs = np.array(phi.displacement.voxel_size)
    disp = phi.displacement.values.astype(np.float64).copy()
    for i in range(len(vs)):
        disp[i] /= vs[i]
    return kernels.jacobian_determinant(disp)


def sampling_grid(shape, phi: DeformationField | None = None,
                  affine: AffineTransform | None = None):
    """Source coordinates for one combined resampling pass.

    G(M) = A(M) + d(A(M)); either part may be absent. Displacements are
    converted from mm to voxels with the displacement's voxel size.
    """
    coords = _identity_grid(shape)
    if affine is not None:
        coords = affine.apply(coords)
    if phi is not None:
        vs = phi.displacement.voxel_size
        disp_vox = phi.displacement.values.astype(np.float64).copy()
        for i in range(len(vs)):
            disp_vox[i] /= vs[i]
        sampled = _sample_displacement(disp_vox, coords)
        coords = [coords[i] + sampled[i] for i in range(len(coords))]
    return coords


def compose(phi: DeformationField | None,
            affine: AffineTransform | None, shape=None,
            voxel_size=None) -> DeformationField:
    """Fold phi o A into a single dense displacement field (mm)."""
    if shape is None:
        shape = phi.shape if phi is not None else affine.shape
    if voxel_size is None:
        voxel_size = (phi.displacement.voxel_size if phi is not None
                      else affine.voxel_size)
    coords = sampling_grid(shape, phi, affine)
    grid = _identity_grid(shape)
    disp = np.stack([(coords[i] - grid[i]) * voxel_size[i]
                     for i in range(len(shape))])
    provenance = phi.provenance if phi is not None else "affine"
    strength = phi.strength if phi is not None else 0.0
    return DeformationField(VectorField(disp, voxel_size),
                            f"composed:{provenance}", strength)


def _as_coords(shape, transform):
    if isinstance(transform, AffineTransform):
        return sampling_grid(shape, None, transform)
    if isinstance(transform, DeformationField):
        return sampling_grid(shape, transform, None)
    raise TypeError(f"cannot warp with {type(transform).__name__}")


def warp_labels(s: LabelVolume, transform) -> LabelVolume:
    """Nearest-neighbor warp; out-of-FOV voxels take background label 0."""
    coords = _as_coords(s.shape, transform)
    warped = kernels.warp_nearest(s.labels, coords, fill=0)
    return LabelVolume(warped, s.label_count, s.voxel_size)


def warp_image(x: ScalarField, transform) -> ScalarField:
    """Multilinear warp; out-of-FOV voxels become 0."""
    coords = _as_coords(x.shape, transform)
    return x.with_values(kernels.warp_linear(x.values, coords))


def sample_crop_mask(shape, proportion, rng: RngStream, voxel_size=None,
                     multi_axis: bool = False) -> CropMask:
    """Binary slab mask zeroing round(p * extent) voxels from one side.

    Draws p ~ U(a, b), one random axis (all axes independently when
    multi_axis is set) and a fair-coin side, then combines the per-axis
    1-D masks by outer-product broadcasting.
    """
    a, b = proportion
    if not (0 <= a <= b <= 1):
        raise ConfigError(f"crop proportion range invalid: {proportion}")
    gen = rng.generator()
    p = float(gen.uniform(a, b))
    ndim = len(shape)
    if multi_axis:
        axes = tuple(range(ndim))
    else:
        axes = (int(gen.integers(0, ndim)),)
    sides = tuple(int(gen.integers(0, 2)) for _ in axes)
    factors = []
    mask = np.ones(tuple(shape))
    for axis in range(ndim):
        m = np.ones(shape[axis])
        if axis in axes:
            depth = int(np.floor(p * shape[axis] + 0.5))
            side = sides[axes.index(axis)]
            if depth > 0:
                if side == 0:
                    m[:depth] = 0.0
                else:
                    m[shape[axis] - depth:] = 0.0
        factors.append(m)
        view = m.reshape([-1 if i == axis else 1 for i in range(ndim)])
        mask = mask * view
    return CropMask(ScalarField(mask, voxel_size), tuple(factors), p,
                    axes, sides)
