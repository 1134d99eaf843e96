"""Compiled vs numpy CG on the matrices the solver actually sees.

    python3 benchmarks/bench_cg.py [--repeat 3]
"""
import argparse
import time

import numpy as np

from hartogs_pq.geometry import build_grid, disk
from hartogs_pq.kernels import CSRKernel
from hartogs_pq.spectral import assemble_magnetic_form, laplacian
from hartogs_pq.weights import PolynomialWeight

QUAD = PolynomialWeight(terms=((2, 0, 1.0), (0, 2, 1.0)))


def matrices(h):
    g = build_grid(disk(0.7), h)
    yield "laplacian", laplacian(g).tocsr()
    yield "magnetic m=8", assemble_magnetic_form(g, QUAD, 8).normalized().tocsr()


def best(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--h", type=float, nargs="*", default=[1 / 32, 1 / 64, 1 / 128])
    args = p.parse_args(argv)
    try:
        from hartogs_pq import _cg  # noqa: F401
    except ImportError:
        raise SystemExit("compiled kernel not built; run `pip install -e . --no-build-isolation`")
    rng = np.random.default_rng(0)
    print(f"{'matrix':<14}{'h':>9}{'n':>8}{'iters':>7}{'compiled s':>12}{'python s':>11}"
          f"{'speedup':>9}")
    for h in args.h:
        for name, A in matrices(h):
            b = rng.standard_normal(A.shape[0])
            if np.iscomplexobj(A.data):
                b = b + 1j * rng.standard_normal(A.shape[0])
            fast, slow = CSRKernel(A), CSRKernel(A, backend="python")
            tc, (xc, it, _) = best(lambda: fast.solve(b, rtol=1e-10), args.repeat)
            tp, (xp, _, _) = best(lambda: slow.solve(b, rtol=1e-10), args.repeat)
            assert np.allclose(xc, xp, rtol=1e-8, atol=1e-12)
            print(f"{name:<14}{h:>9.5f}{A.shape[0]:>8}{it:>7}{tc:>12.4f}{tp:>11.4f}"
                  f"{tp / tc:>8.1f}x")


if __name__ == "__main__":
    main()
