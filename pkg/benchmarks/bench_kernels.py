"""Time the compiled and numpy kernel backends on representative shapes.

Run ``python benchmarks/bench_kernels.py``; prints one line per kernel and
backend with the best-of-N wall time and the speedup over numpy.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from ofqr import kernels
from ofqr.optics import Geometry, _sensor_xy, emitter_positions


def cases(rng):
    geom = Geometry()
    ex, ey, ez, area = emitter_positions(geom)
    sx, sy = _sensor_xy(geom)
    rows = slice(0, 512)
    yield "transfer_block 512x13456", "transfer_block", (sx[rows], sy[rows], ex, ey, ez, area)

    a = rng.standard_normal((256, 576))

    def sweep_args():
        return (a.copy(), np.eye(256), 1e-12)

    yield "jacobi_sweep 256x576", "jacobi_sweep", sweep_args

    x = rng.standard_normal((10, 16, 34, 34))
    yield "im2col 10x16x32x32", "im2col", (x, 3, 1, 32, 32)
    cols = rng.standard_normal((16 * 9, 10 * 32 * 32))
    yield "col2im 10x16x32x32", "col2im", (cols, 10, 16, 34, 34, 3, 1, 32, 32)


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    rng = np.random.default_rng(0)
    impls = kernels.backends()
    print(f"backends: {', '.join(sorted(impls))} (active: {kernels.BACKEND})")
    for label, name, fn_args in cases(rng):
        times = {}
        for backend, impl in sorted(impls.items()):
            fn = getattr(impl, name)
            if callable(fn_args):
                run = lambda: fn(*fn_args())  # noqa: E731
            else:
                run = lambda: fn(*fn_args)  # noqa: E731
            run()
            n = 1 if name == "jacobi_sweep" else 3
            times[backend] = min(timeit.repeat(run, number=n, repeat=args.repeat)) / n
        base = times["python"]
        for backend, t in sorted(times.items()):
            print(f"{label:28s} {backend:8s} {t * 1e3:10.3f} ms  x{base / t:6.2f}")


if __name__ == "__main__":
    main()
