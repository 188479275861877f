"""Compiled kernels versus their pure-Python twins.

Run with ``python benchmarks/bench_kernels.py [--traj N] [--grid N]``.
Times the Monte Carlo batch and the tridiagonal eigensolver on each
backend and checks that both produce the same numbers.
"""
import argparse
import time

import numpy as np

from ecdlab import _pykernels
from ecdlab._backend import compiled_kernels
from ecdlab.potential import Landscape, build_maps
from ecdlab.secd_sim import SimConfig, prepare


def best_of(fn, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_mc(kern, n_traj, repeat):
    lnd = Landscape.quartic(1.0, 2.0, 1.0)
    maps = build_maps(lnd, 1.0)
    st = prepare(lnd, maps, SimConfig(1.0))
    args = (*st.table.args(), st.x_hit, st.x_d, st.tail_cost, 1.0, 1, 1e7, 0, 0, n_traj, 1)
    return best_of(lambda: kern.simulate_batch(*args), repeat)


def bench_eig(kern, n, repeat):
    rng = np.random.default_rng(0)
    d, e = rng.normal(size=n), rng.normal(size=n - 1)

    def run():
        w = np.asarray(kern.tridiag_eigvals(d, e))
        return w, np.asarray(kern.tridiag_eigvecs(d, e, w, 1e-5))

    return best_of(run, repeat)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--traj", type=int, default=5000, help="trajectories per MC batch")
    ap.add_argument("--grid", type=int, default=1024, help="tridiagonal matrix size")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    ck = compiled_kernels()
    if ck is None:
        print("compiled extension not built; only the Python backend is available")
    rows = []
    tp, mp = bench_mc(_pykernels, args.traj, 1)
    rows.append(("monte carlo", f"{args.traj} traj", tp))
    ep, (wp, zp) = bench_eig(_pykernels, args.grid, 1)
    rows.append(("eigensolver", f"n={args.grid}", ep))
    if ck is not None:
        tc, mc = bench_mc(ck, args.traj, args.repeat)
        ec, (wc, zc) = bench_eig(ck, args.grid, args.repeat)
        same = all(np.array_equal(np.asarray(a), np.asarray(b)) for a, b in zip(mc, mp))
        print(f"monte carlo outputs identical: {same}")
        print(f"eigenvalue max diff: {np.abs(wc - wp).max():.2e}, "
              f"eigenvector max diff: {np.abs(zc - zp).max():.2e}")
        rows = [(r[0], r[1], r[2], c) for r, c in zip(rows, (tc, ec))]
    print(f"{'kernel':<14}{'size':<14}{'python [s]':>12}{'compiled [s]':>14}{'speed-up':>10}")
    for r in rows:
        if len(r) == 4:
            print(f"{r[0]:<14}{r[1]:<14}{r[2]:>12.3f}{r[3]:>14.4f}{r[2] / r[3]:>10.1f}")
        else:
            print(f"{r[0]:<14}{r[1]:<14}{r[2]:>12.3f}{'-':>14}{'-':>10}")


if __name__ == "__main__":
    main()
