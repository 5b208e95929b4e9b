"""Compare the compiled and pure-Python jet product backends.

    python benchmarks/bench_jet.py [--repeat 5]

Times the truncated Cauchy product for a few (dim, order, batch) shapes and
the full operational residual on the torus, once per available backend.
"""
import argparse
import timeit

import numpy as np

from geoaudit import _kernels
from geoaudit import expr as ex
from geoaudit._tables import ncoef
from geoaudit.geometry import OperatorParams
from geoaudit.qop import residual_operational
from geoaudit.surfaces import builtin_surface, sample_points

SHAPES = [(2, 4, 1), (3, 5, 1), (3, 5, 64), (3, 7, 64), (4, 6, 256)]


def product_case(dim, order, batch, dtype):
    rng = np.random.default_rng(0)
    n = ncoef(dim, order)
    a = rng.normal(size=(n, batch)).astype(dtype)
    b = rng.normal(size=(n, batch)).astype(dtype)
    return lambda: _kernels.mul_coeffs(a, b, dim, order)


def residual_case():
    X, Y, Z = ex.variables(3)
    torus = builtin_surface("torus")
    pts = sample_points(torus, 32, seed=1)
    psi = ex.ComplexExpr(ex.exp(X) * (1 + 0.3 * Z), ex.sin(X + 2 * Y))
    return lambda: residual_operational(torus, psi, pts, OperatorParams(2.0, 1.0))


def best(fn, repeat):
    fn()
    number = max(1, int(0.2 / max(timeit.timeit(fn, number=1), 1e-7)))
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = _kernels.available_backends()
    cases = [(f"product dim={d} order={k} batch={b} {t.__name__}", product_case(d, k, b, t))
             for d, k, b in SHAPES for t in (np.float64, np.complex128)]
    cases.append(("residual torus, 32 points", residual_case()))
    width = max(len(name) for name, _ in cases)
    print(f"{'case':<{width}}  " + "  ".join(f"{b:>12}" for b in backends) + ("  speedup" if len(backends) > 1 else ""))
    start = _kernels.get_backend()
    try:
        for name, fn in cases:
            times = []
            for b in backends:
                _kernels.set_backend(b)
                times.append(best(fn, args.repeat))
            row = f"{name:<{width}}  " + "  ".join(f"{t * 1e6:>10.1f}us" for t in times)
            if len(times) > 1:
                row += f"  {times[0] / times[1]:>6.2f}x"
            print(row)
    finally:
        _kernels.set_backend(start)


if __name__ == "__main__":
    main()
