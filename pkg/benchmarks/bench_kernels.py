"""Compare the numba and numpy path kernels on the same seeded workloads.

Usage:  python3 benchmarks/bench_kernels.py [--paths N] [--repeat R]

Each workload runs once untimed (numba compiles or loads its cache), then
best-of-R wall time is reported.  Outputs of the two backends are checked
for bit-identity before timing.
"""

import argparse
import timeit
from fractions import Fraction

import numpy as np

from sepwalk.azema_yor import build_schedule
from sepwalk.kernels import get_backend, numba_available
from sepwalk.markovian import build_policy
from sepwalk.measure import CasinoCPT, MixedGeometric, atoms


def workloads(paths):
    three = atoms({-1: Fraction(1, 2), 0: Fraction(1, 4), 2: Fraction(1, 4)})
    geom = MixedGeometric(5 / 12, 5 / 12, 13 / 24, 13 / 24)
    casino = CasinoCPT()

    def markov(m):
        p = build_policy(m)
        r = np.ascontiguousarray(p.r)
        return lambda k: k.markov_paths(np.uint64(1), paths, p.lo, r, 10 ** 6)

    def ay(m, max_steps=10 ** 6):
        s = build_schedule(m, max_levels=256)
        offsets, xs, rhos = s.csr()
        return lambda k: k.ay_paths(np.uint64(1), paths, offsets, xs, rhos, s.xbar_int,
                                    max_steps)

    return [
        ("markovian three-point", markov(three)),
        ("markovian geometric", markov(geom)),
        ("azema-yor three-point", ay(three)),
        ("azema-yor geometric", ay(geom)),
        # the casino law has infinite variance; cap the walk length
        ("azema-yor casino (<=1000 steps)", ay(casino, 1000)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not numba_available():
        raise SystemExit("numba is not installed; nothing to compare")
    nb, npk = get_backend("numba"), get_backend("numpy")
    print(f"{'workload':34s} {'numpy s':>9s} {'numba s':>9s} {'speedup':>8s}")
    for name, run in workloads(args.paths):
        a, b = run(npk), run(nb)
        assert all(np.array_equal(x, y) for x, y in zip(a, b)), name
        t_np = min(timeit.repeat(lambda: run(npk), number=1, repeat=args.repeat))
        t_nb = min(timeit.repeat(lambda: run(nb), number=1, repeat=args.repeat))
        print(f"{name:34s} {t_np:9.3f} {t_nb:9.3f} {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
