"""Compiled vs pure-Python tridiagonal kernels.

    python benchmarks/bench_kernels.py [--sizes 600 4000 20000] [--shifts 64]

Times ``tridiag_inverse_norm`` on one matrix and ``shifted_inverse_norms``
on a batch of real shifts of the scaled strip mode operator
``-d^2 + i s^2`` (the waveguide hot loop), and checks both backends agree.
"""

import argparse
import time

import numpy as np

from dampwave import kernels


def mode_operator(N, S=8.0):
    s = np.linspace(-S, S, N + 2)[1:-1]
    h = s[1] - s[0]
    off = np.full(N - 1, -1.0 / h**2, dtype=complex)
    return off, 2.0 / h**2 + 1j * s**2, off.copy()


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[600, 4000, 20000])
    p.add_argument("--shifts", type=int, default=64)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    backends = {"python": kernels.python_backend}
    if kernels.compiled_backend is not None:
        backends["compiled"] = kernels.compiled_backend
    else:
        print("compiled backend unavailable; timing the fallback only")
    shifts = np.linspace(-30.0, 5.0, args.shifts).astype(complex)
    print(f"{'N':>7} {'backend':>9} {'single [ms]':>12} {'batch [ms]':>11} {'norm':>14}")
    for N in args.sizes:
        dl, d, du = mode_operator(N)
        ref = None
        for name, mod in backends.items():
            t1, (nrm, _, _) = best_of(lambda: mod.tridiag_inverse_norm(dl, d, du), args.repeat)
            t2, (norms, _, _) = best_of(
                lambda: mod.shifted_inverse_norms(dl, d, du, shifts), args.repeat)
            print(f"{N:>7} {name:>9} {1e3 * t1:>12.2f} {1e3 * t2:>11.1f} {nrm:>14.10f}")
            if ref is None:
                ref = norms
            else:
                dev = np.max(np.abs(norms - ref) / ref)
                print(f"{'':>7} {'':>9} max relative deviation between backends {dev:.1e}")


if __name__ == "__main__":
    main()
