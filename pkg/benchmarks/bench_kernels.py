"""Timing of the compiled kernels against their numpy counterparts.

Run ``python benchmarks/bench_kernels.py [--repeat N] [--threads T]``.
"""
import argparse
import timeit

import numpy as np

from colorqubit import _kernels_py
from colorqubit.dispersion import EffectiveIndexModel, WaveguideGeometry
from colorqubit.spectra import PumpSpec, mf_node_set
from colorqubit.units import thz_to_rad_per_ps, wavelength_to_omega

try:
    from colorqubit import _kernels as _compiled
except ImportError:
    _compiled = None


def slab_case(n=20000, seed=1):
    rng = np.random.default_rng(seed)
    k0 = 2 * np.pi / rng.uniform(0.6, 1.6, n)
    return (k0, rng.uniform(1.9, 2.1, n), rng.uniform(1.4, 1.5, n), np.ones(n), rng.uniform(0.3, 2.0, n), True)


def mf_case(points=128):
    o1, os_, o2 = (float(x) for x in wavelength_to_omega([0.822, 1.253, 1.554]))
    orr = o1 - o2 + os_
    s1, s2 = (float(x) for x in thz_to_rad_per_ps([6.0, 0.7]))
    model = EffectiveIndexModel(WaveguideGeometry(1.9133, 0.7))
    table = model.k_table(o2 - 300, orr + 300)
    nodes, weights = mf_node_set(PumpSpec(o1, s1))
    ws = os_ + np.linspace(-5 * s1, 5 * s1, points)
    wr = orr + np.linspace(-5 * s1, 5 * s1, points)
    return (nodes, weights, table(nodes), ws, table(ws), wr, table(wr), o2, s2, 1e4,
            table.origin, table.step, table.k, table.dk)


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--threads", type=int, default=1, help="OpenMP threads for the compiled MF kernel")
    ap.add_argument("--points", type=int, default=128, help="MF grid points per axis")
    args = ap.parse_args(argv)
    if _compiled is None:
        print("compiled kernels are not built; run `python setup.py build_ext --inplace`")
    slab, mf = slab_case(), mf_case(args.points)
    rows = [("slab_fundamental_index (20000 solves)",
             lambda: _kernels_py.slab_fundamental_index(*slab),
             _compiled and (lambda: _compiled.slab_fundamental_index(*slab))),
            (f"mf_accumulate ({args.points}x{args.points}, {mf[0].size} nodes)",
             lambda: _kernels_py.mf_accumulate(*mf, 1),
             _compiled and (lambda: _compiled.mf_accumulate(*mf, args.threads)))]
    print(f"{'kernel':<42}{'numpy [ms]':>12}{'compiled [ms]':>15}{'speed-up':>10}")
    for name, py, cy in rows:
        t_py = best_of(py, args.repeat) * 1e3
        if cy:
            t_cy = best_of(cy, args.repeat) * 1e3
            print(f"{name:<42}{t_py:>12.2f}{t_cy:>15.2f}{t_py / t_cy:>10.1f}")
        else:
            print(f"{name:<42}{t_py:>12.2f}{'n/a':>15}{'':>10}")
    if _compiled is not None:
        a, b = _compiled.mf_accumulate(*mf, args.threads), _kernels_py.mf_accumulate(*mf, 1)
        print(f"max relative difference (MF): {np.max(np.abs(a - b)) / np.max(np.abs(b)):.2e}")


if __name__ == "__main__":
    main()
