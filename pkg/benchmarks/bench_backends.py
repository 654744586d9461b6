"""Compare the numba kernels against the pure-numpy fallback.

Run directly:  python3 benchmarks/bench_backends.py [--repeat N]
Numba warms up each kernel once before timing so compilation is excluded.
"""

import argparse
import time

import numpy as np

from voxsynth import _kernels_numpy
from voxsynth.noise import _unit_gradients

try:
    from voxsynth import _kernels_numba
except ImportError:
    _kernels_numba = None


def make_cases(gen):
    shape = (96, 96, 96)
    coords = [gen.uniform(0, n - 1, shape) for n in shape]
    taps = gen.random(9)
    taps /= taps.sum()
    return {
        "conv1d_rows": (lambda k: k.conv1d_rows(
            gen.random((96 * 96, 96)), taps)),
        "perlin_nd": (lambda k, g=_unit_gradients(gen, (8, 8, 8), 3):
                      k.perlin_nd(shape, g)),
        "warp_linear": (lambda k, src=gen.random(shape):
                        k.warp_linear(src, coords)),
        "warp_nearest": (lambda k,
                         src=gen.integers(0, 9, shape).astype(np.uint32):
                         k.warp_nearest(src, coords, fill=0)),
        "jacobian_determinant": (lambda k,
                                 d=0.3 * gen.standard_normal((3,) + shape):
                                 k.jacobian_determinant(d)),
    }


def time_call(fn, backend, repeat):
    fn(backend)  # warm-up (jit compilation for numba)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(backend)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    cases = make_cases(np.random.default_rng(0))
    print(f"{'kernel':<22}{'numpy':>10}{'numba':>10}{'speedup':>9}")
    for name, fn in cases.items():
        t_np = time_call(fn, _kernels_numpy, args.repeat)
        if _kernels_numba is None:
            print(f"{name:<22}{t_np * 1e3:>8.1f}ms{'n/a':>10}{'n/a':>9}")
            continue
        t_nb = time_call(fn, _kernels_numba, args.repeat)
        print(f"{name:<22}{t_np * 1e3:>8.1f}ms{t_nb * 1e3:>8.1f}ms"
              f"{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
