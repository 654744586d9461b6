"""Pure-numpy implementations of the hot inner loops.

Mirror of :mod:`voxsynth._kernels_numba`; selected when the environment
variable ``VOXSYNTH_DISABLE_JIT=1`` is set or numba is unavailable. Both
backends implement the same contracts and agree within 1e-5.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def conv1d_rows(rows: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Correlate each row with centered taps, replicate-edge padding."""
    half = len(taps) // 2
    padded = np.pad(rows, ((0, 0), (half, half)), mode="edge")
    out = np.zeros_like(rows, dtype=rows.dtype)
    n = rows.shape[1]
    for k in range(len(taps)):
        out += taps[k] * padded[:, k:k + n]
    return out


def _fade(t, quintic):
    if quintic:
        return t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
    return t


def perlin_nd(shape, grads, quintic=False, dtype=np.float64):
    """Gradient noise over a corner-aligned lattice of control points.

    grads has shape (C_1, ..., C_N, N) with unit gradient vectors. Lattice
    coordinates map corner-aligned onto the output grid: the first and last
    control points coincide with the first and last voxels along each axis.
    """
    ndim = len(shape)
    cells = [grads.shape[i] - 1 for i in range(ndim)]
    coords = []
    for i, n in enumerate(shape):
        if n > 1:
            lat = np.arange(n, dtype=np.float64) * (cells[i] / (n - 1))
        else:
            lat = np.zeros(n)
        coords.append(lat)
    mesh = np.meshgrid(*coords, indexing="ij")
    cell_idx = []
    frac = []
    for i in range(ndim):
        ci = np.minimum(np.floor(mesh[i]).astype(np.intp), cells[i] - 1)
        cell_idx.append(ci)
        frac.append(mesh[i] - ci)

    out = np.zeros(shape, dtype=np.float64)
    for corner in range(1 << ndim):
        weight = np.ones(shape, dtype=np.float64)
        idx = []
        for i in range(ndim):
            bit = (corner >> i) & 1
            t = _fade(frac[i], quintic)
            weight = weight * (t if bit else 1.0 - t)
            idx.append(cell_idx[i] + bit)
        dot = np.zeros(shape, dtype=np.float64)
        for i in range(ndim):
            bit = (corner >> i) & 1
            g = grads[tuple(idx) + (i,)]
            dot += g * (frac[i] - bit)
        out += weight * dot
    return out.astype(dtype)


def warp_linear(src: np.ndarray, coords) -> np.ndarray:
    """Multilinear sample of src at absolute coords; out-of-grid -> 0.

    coords is a sequence of N arrays, each of the output shape.
    """
    ndim = src.ndim
    shape = coords[0].shape
    valid = np.ones(shape, dtype=bool)
    lo, frac = [], []
    for i in range(ndim):
        c = coords[i]
        valid &= (c >= 0) & (c <= src.shape[i] - 1)
        cc = np.clip(c, 0, src.shape[i] - 1)
        f = np.floor(cc)
        f = np.minimum(f, src.shape[i] - 2) if src.shape[i] > 1 else f * 0
        lo.append(f.astype(np.intp))
        frac.append(cc - f)
    out = np.zeros(shape, dtype=src.dtype)
    for corner in range(1 << ndim):
        weight = np.ones(shape, dtype=np.float64)
        idx = []
        for i in range(ndim):
            bit = (corner >> i) & 1
            weight = weight * (frac[i] if bit else 1.0 - frac[i])
            hi = min(1, src.shape[i] - 1)
            idx.append(lo[i] + (bit and hi))
        out = out + (weight * src[tuple(idx)]).astype(src.dtype)
    out[~valid] = 0
    return out


def warp_nearest(src: np.ndarray, coords, fill=0) -> np.ndarray:
    """Nearest-neighbor sample; ties round half toward the lower index."""
    ndim = src.ndim
    shape = coords[0].shape
    valid = np.ones(shape, dtype=bool)
    idx = []
    for i in range(ndim):
        j = np.ceil(coords[i] - 0.5).astype(np.intp)
        valid &= (j >= 0) & (j <= src.shape[i] - 1)
        idx.append(np.clip(j, 0, src.shape[i] - 1))
    out = src[tuple(idx)].copy()
    out[~valid] = fill
    return out


def jacobian_determinant(disp: np.ndarray) -> np.ndarray:
    """Jacobian determinant of the map id + disp (voxel units).

    disp has shape (N, *dims). Central differences in the interior,
    one-sided at the edges.
    """
    ndim = disp.shape[0]
    grads = [np.gradient(disp[i].astype(np.float64)) for i in range(ndim)]
    if ndim == 2:
        j00 = 1.0 + grads[0][0]
        j01 = grads[0][1]
        j10 = grads[1][0]
        j11 = 1.0 + grads[1][1]
        return j00 * j11 - j01 * j10
    j = np.empty((3, 3) + disp.shape[1:], dtype=np.float64)
    for a in range(3):
        for b in range(3):
            j[a, b] = grads[a][b] + (1.0 if a == b else 0.0)
    return (j[0, 0] * (j[1, 1] * j[2, 2] - j[1, 2] * j[2, 1])
            - j[0, 1] * (j[1, 0] * j[2, 2] - j[1, 2] * j[2, 0])
            + j[0, 2] * (j[1, 0] * j[2, 1] - j[1, 1] * j[2, 0]))
