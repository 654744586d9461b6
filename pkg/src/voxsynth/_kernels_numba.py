"""Numba-compiled hot loops (default backend).

Same API as :mod:`voxsynth._kernels_numpy`. Kernels are specialized for
2D and 3D; thin dispatchers keep the N-D contract. Compilation results
are cached on disk so worker processes do not recompile.
"""

from __future__ import annotations

import numpy as np
from numba import njit

NAME = "numba"

_JIT = dict(cache=True, nogil=True)


@njit(**_JIT)
def _conv1d_rows(rows, taps, out):
    nrows, n = rows.shape
    k = taps.shape[0]
    half = k // 2
    for r in range(nrows):
        for i in range(n):
            acc = 0.0
            for t in range(k):
                j = i + t - half
                if j < 0:
                    j = 0
                elif j > n - 1:
                    j = n - 1
                acc += taps[t] * rows[r, j]
            out[r, i] = acc


def conv1d_rows(rows: np.ndarray, taps: np.ndarray) -> np.ndarray:
    out = np.empty_like(rows)
    _conv1d_rows(rows, taps.astype(np.float64), out)
    return out


@njit(inline="always")
def _fade(t, quintic):
    if quintic:
        return t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
    return t


@njit(**_JIT)
def _perlin_2d(n0, n1, grads, quintic, out):
    c0 = grads.shape[0] - 1
    c1 = grads.shape[1] - 1
    s0 = c0 / (n0 - 1) if n0 > 1 else 0.0
    s1 = c1 / (n1 - 1) if n1 > 1 else 0.0
    for i in range(n0):
        l0 = i * s0
        a0 = int(l0)
        if a0 > c0 - 1:
            a0 = c0 - 1
        t0 = l0 - a0
        f0 = _fade(t0, quintic)
        for j in range(n1):
            l1 = j * s1
            a1 = int(l1)
            if a1 > c1 - 1:
                a1 = c1 - 1
            t1 = l1 - a1
            f1 = _fade(t1, quintic)
            acc = 0.0
            for b0 in range(2):
                w0 = f0 if b0 else 1.0 - f0
                d0 = t0 - b0
                for b1 in range(2):
                    w1 = f1 if b1 else 1.0 - f1
                    d1 = t1 - b1
                    g = grads[a0 + b0, a1 + b1]
                    acc += w0 * w1 * (g[0] * d0 + g[1] * d1)
            out[i, j] = acc


@njit(**_JIT)
def _perlin_3d(n0, n1, n2, grads, quintic, out):
    c0 = grads.shape[0] - 1
    c1 = grads.shape[1] - 1
    c2 = grads.shape[2] - 1
    s0 = c0 / (n0 - 1) if n0 > 1 else 0.0
    s1 = c1 / (n1 - 1) if n1 > 1 else 0.0
    s2 = c2 / (n2 - 1) if n2 > 1 else 0.0
    for i in range(n0):
        l0 = i * s0
        a0 = min(int(l0), c0 - 1)
        t0 = l0 - a0
        f0 = _fade(t0, quintic)
        for j in range(n1):
            l1 = j * s1
            a1 = min(int(l1), c1 - 1)
            t1 = l1 - a1
            f1 = _fade(t1, quintic)
            for k in range(n2):
                l2 = k * s2
                a2 = min(int(l2), c2 - 1)
                t2 = l2 - a2
                f2 = _fade(t2, quintic)
                acc = 0.0
                for b0 in range(2):
                    w0 = f0 if b0 else 1.0 - f0
                    d0 = t0 - b0
                    for b1 in range(2):
                        w1 = f1 if b1 else 1.0 - f1
                        d1 = t1 - b1
                        for b2 in range(2):
                            w2 = f2 if b2 else 1.0 - f2
                            d2 = t2 - b2
                            g = grads[a0 + b0, a1 + b1, a2 + b2]
                            acc += w0 * w1 * w2 * (
                                g[0] * d0 + g[1] * d1 + g[2] * d2)
                out[i, j, k] = acc


def perlin_nd(shape, grads, quintic=False, dtype=np.float64):
    out = np.empty(shape, dtype=np.float64)
    g = np.ascontiguousarray(grads, dtype=np.float64)
    if len(shape) == 2:
        _perlin_2d(shape[0], shape[1], g, quintic, out)
    else:
        _perlin_3d(shape[0], shape[1], shape[2], g, quintic, out)
    return out.astype(dtype)


@njit(**_JIT)
def _warp_linear_2d(src, c0, c1, out):
    n0, n1 = src.shape
    m0, m1 = c0.shape
    for i in range(m0):
        for j in range(m1):
            x = c0[i, j]
            y = c1[i, j]
            if x < 0 or x > n0 - 1 or y < 0 or y > n1 - 1:
                out[i, j] = 0
                continue
            x0 = int(x)
            y0 = int(y)
            if x0 > n0 - 2:
                x0 = max(n0 - 2, 0)
            if y0 > n1 - 2:
                y0 = max(n1 - 2, 0)
            fx = x - x0
            fy = y - y0
            x1 = min(x0 + 1, n0 - 1)
            y1 = min(y0 + 1, n1 - 1)
            out[i, j] = ((1 - fx) * (1 - fy) * src[x0, y0]
                         + (1 - fx) * fy * src[x0, y1]
                         + fx * (1 - fy) * src[x1, y0]
                         + fx * fy * src[x1, y1])


@njit(**_JIT)
def _warp_linear_3d(src, c0, c1, c2, out):
    n0, n1, n2 = src.shape
    m0, m1, m2 = c0.shape
    for i in range(m0):
        for j in range(m1):
            for k in range(m2):
                x = c0[i, j, k]
                y = c1[i, j, k]
                z = c2[i, j, k]
                if (x < 0 or x > n0 - 1 or y < 0 or y > n1 - 1
                        or z < 0 or z > n2 - 1):
                    out[i, j, k] = 0
                    continue
                x0 = int(x)
                y0 = int(y)
                z0 = int(z)
                if x0 > n0 - 2:
                    x0 = max(n0 - 2, 0)
                if y0 > n1 - 2:
                    y0 = max(n1 - 2, 0)
                if z0 > n2 - 2:
                    z0 = max(n2 - 2, 0)
                fx = x - x0
                fy = y - y0
                fz = z - z0
                x1 = min(x0 + 1, n0 - 1)
                y1 = min(y0 + 1, n1 - 1)
                z1 = min(z0 + 1, n2 - 1)
                c00 = src[x0, y0, z0] * (1 - fz) + src[x0, y0, z1] * fz
                c01 = src[x0, y1, z0] * (1 - fz) + src[x0, y1, z1] * fz
                c10 = src[x1, y0, z0] * (1 - fz) + src[x1, y0, z1] * fz
                c11 = src[x1, y1, z0] * (1 - fz) + src[x1, y1, z1] * fz
                out[i, j, k] = ((c00 * (1 - fy) + c01 * fy) * (1 - fx)
                                + (c10 * (1 - fy) + c11 * fy) * fx)


def warp_linear(src: np.ndarray, coords) -> np.ndarray:
    shape = coords[0].shape
    out = np.empty(shape, dtype=src.dtype)
    src = np.ascontiguousarray(src)
    cs = [np.ascontiguousarray(c, dtype=np.float64) for c in coords]
    if src.ndim == 2:
        _warp_linear_2d(src, cs[0], cs[1], out)
    else:
        _warp_linear_3d(src, cs[0], cs[1], cs[2], out)
    return out


@njit(**_JIT)
def _warp_nearest_2d(src, c0, c1, fill, out):
    n0, n1 = src.shape
    m0, m1 = c0.shape
    for i in range(m0):
        for j in range(m1):
            a = int(np.ceil(c0[i, j] - 0.5))
            b = int(np.ceil(c1[i, j] - 0.5))
            if a < 0 or a > n0 - 1 or b < 0 or b > n1 - 1:
                out[i, j] = fill
            else:
                out[i, j] = src[a, b]


@njit(**_JIT)
def _warp_nearest_3d(src, c0, c1, c2, fill, out):
    n0, n1, n2 = src.shape
    m0, m1, m2 = c0.shape
    for i in range(m0):
        for j in range(m1):
            for k in range(m2):
                a = int(np.ceil(c0[i, j, k] - 0.5))
                b = int(np.ceil(c1[i, j, k] - 0.5))
                c = int(np.ceil(c2[i, j, k] - 0.5))
                if (a < 0 or a > n0 - 1 or b < 0 or b > n1 - 1
                        or c < 0 or c > n2 - 1):
                    out[i, j, k] = fill
                else:
                    out[i, j, k] = src[a, b, c]


def warp_nearest(src: np.ndarray, coords, fill=0) -> np.ndarray:
    shape = coords[0].shape
    out = np.empty(shape, dtype=src.dtype)
    src = np.ascontiguousarray(src)
    cs = [np.ascontiguousarray(c, dtype=np.float64) for c in coords]
    fill = src.dtype.type(fill)
    if src.ndim == 2:
        _warp_nearest_2d(src, cs[0], cs[1], fill, out)
    else:
        _warp_nearest_3d(src, cs[0], cs[1], cs[2], fill, out)
    return out


@njit(**_JIT)
def _jacdet_2d(d0, d1, out):
    n0, n1 = d0.shape
    for i in range(n0):
        for j in range(n1):
            i0 = max(i - 1, 0)
            i1 = min(i + 1, n0 - 1)
            j0 = max(j - 1, 0)
            j1 = min(j + 1, n1 - 1)
            hi = i1 - i0
            hj = j1 - j0
            a00 = 1.0 + (d0[i1, j] - d0[i0, j]) / hi
            a01 = (d0[i, j1] - d0[i, j0]) / hj
            a10 = (d1[i1, j] - d1[i0, j]) / hi
            a11 = 1.0 + (d1[i, j1] - d1[i, j0]) / hj
            out[i, j] = a00 * a11 - a01 * a10


@njit(**_JIT)
def _jacdet_3d(d0, d1, d2, out):
    n0, n1, n2 = d0.shape
    for i in range(n0):
        for j in range(n1):
            for k in range(n2):
                i0 = max(i - 1, 0)
                i1 = min(i + 1, n0 - 1)
                j0 = max(j - 1, 0)
                j1 = min(j + 1, n1 - 1)
                k0 = max(k - 1, 0)
                k1 = min(k + 1, n2 - 1)
                hi = i1 - i0
                hj = j1 - j0
                hk = k1 - k0
                a00 = 1.0 + (d0[i1, j, k] - d0[i0, j, k]) / hi
                a01 = (d0[i, j1, k] - d0[i, j0, k]) / hj
                a02 = (d0[i, j, k1] - d0[i, j, k0]) / hk
                a10 = (d1[i1, j, k] - d1[i0, j, k]) / hi
                a11 = 1.0 + (d1[i, j1, k] - d1[i, j0, k]) / hj
                a12 = (d1[i, j, k1] - d1[i, j, k0]) / hk
                a20 = (d2[i1, j, k] - d2[i0, j, k]) / hi
                a21 = (d2[i, j1, k] - d2[i, j0, k]) / hj
                a22 = 1.0 + (d2[i, j, k1] - d2[i, j, k0]) / hk
                out[i, j, k] = (a00 * (a11 * a22 - a12 * a21)
                                - a01 * (a10 * a22 - a12 * a20)
                                + a02 * (a10 * a21 - a11 * a20))


def jacobian_determinant(disp: np.ndarray) -> np.ndarray:
    ds = [np.ascontiguousarray(disp[i], dtype=np.float64)
          for i in range(disp.shape[0])]
    out = np.empty(disp.shape[1:], dtype=np.float64)
    if disp.shape[0] == 2:
        _jacdet_2d(ds[0], ds[1], out)
    else:
        _jacdet_3d(ds[0], ds[1], ds[2], out)
    return out
