"""Compiled vs numpy kernels on period-map batches and winding sums.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from rotodeg import kernels
from rotodeg.flow import DEFAULT_CONFIG, knots
from rotodeg.vectorfield import duffing_superlinear, example51, perturbed_linear, rigid_rotation


def _cases():
    rng = np.random.default_rng(0)
    for name, field, scale in (("rigid_rotation", rigid_rotation(), 2.0), ("example51", example51(), 4.0),
                               ("duffing", duffing_superlinear(), 5.0), ("perturbed_linear", perturbed_linear(), 1.0)):
        for n in (16, 256):
            z0 = rng.uniform(-scale, scale, (n, 2))
            yield f"rk4 {name} n={n}", lambda b, f=field, z=z0: kernels.rk4_flow(
                f, z, knots(f, 0.0, f.period), DEFAULT_CONFIG.step_h, backend=b)
    a = np.linspace(0.0, 2 * np.pi, 100_001)
    wx, wy = np.cos(3 * a), np.sin(3 * a)
    yield "winding n=1e5", lambda b: kernels.winding_sum(wx, wy, backend=b)


def main(argv=None):
    p = argparse.ArgumentParser()
    p.add_argument("--repeat", type=int, default=5)
    ns = p.parse_args(argv)
    if not kernels.HAVE_COMPILED:
        print("compiled extension not built; only the numpy backend is available")
    print(f"{'case':32s} {'numpy ms':>10s} {'compiled ms':>12s} {'speedup':>8s}")
    for label, fn in _cases():
        t_py = min(timeit.repeat(lambda: fn("numpy"), number=1, repeat=ns.repeat)) * 1e3
        if kernels.HAVE_COMPILED:
            t_c = min(timeit.repeat(lambda: fn("compiled"), number=1, repeat=ns.repeat)) * 1e3
            print(f"{label:32s} {t_py:10.2f} {t_c:12.2f} {t_py / t_c:8.1f}")
        else:
            print(f"{label:32s} {t_py:10.2f} {'-':>12s} {'-':>8s}")


if __name__ == "__main__":
    main()
