"""Compiled vs pure-Python kernel timings.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from semibif import Nonlinearity, ProblemSpec, kernels
from semibif.solvers import parabolic_evolve, radial_shoot, solve_minimal

CASES = {
    "shoot d=3 gelfand alpha=10": lambda b: radial_shoot(Nonlinearity.exponential(), 3, 1.0, 10.0,
                                                          backend=b),
    "monotone iterate d=1 n=2048": lambda b: solve_minimal(ProblemSpec(1, 1.0, Nonlinearity.exponential()),
                                                           3.0, backend=b),
    "imex evolve d=2 n=256 t=0.5": lambda b: parabolic_evolve(
        ProblemSpec(2, 1.0, Nonlinearity.arrhenius(0.3)), 2.0, grid_n=256, t_max=0.5, backend=b),
}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    backends = ["python"] + (["cython"] if kernels.compiled is not None else [])
    print(f"{'case':32s} " + " ".join(f"{b:>10s}" for b in backends) + "   speedup")
    for name, fn in CASES.items():
        times = []
        for b in backends:
            fn(b)  # warm-up
            times.append(min(timeit.repeat(lambda: fn(b), number=1, repeat=args.repeat)))
        row = f"{name:32s} " + " ".join(f"{t * 1e3:8.2f}ms" for t in times)
        if len(times) == 2:
            row += f"   {times[0] / times[1]:7.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
