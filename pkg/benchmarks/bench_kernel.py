"""Compare the compiled Gillespie loop with the pure-Python fallback.

Both backends run the same seeded coupled epidemic trajectory; the script
checks that they end in the same state and prints events per second.

    python benchmarks/bench_kernel.py --events 200000 --side 200
"""

import argparse
import time
from fractions import Fraction

import numpy as np

from ipscert.lattice import Lattice
from ipscert.models import Epidemic
from ipscert.simulator import simulate_coupled, simulate_single


def timed(fn, **kw):
    start = time.perf_counter()
    res = fn(**kw)
    return res, time.perf_counter() - start


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--events", type=int, default=200_000)
    parser.add_argument("--side", type=int, default=200)
    parser.add_argument("--seed", type=int, default=11)
    args = parser.parse_args()

    system = Epidemic(Fraction(1, 2), Fraction(1, 2), Fraction(1, 10), Fraction(1, 2), 2).system()
    lattice = Lattice(1, args.side)
    runs = {
        "single": (simulate_single, dict(spec=system, lattice=lattice, init=1)),
        "coupled": (simulate_coupled, dict(lower=system, upper=system, lattice=lattice, init=(0, 2))),
    }
    print(f"{'run':<8} {'backend':<8} {'events':>8} {'seconds':>9} {'events/s':>12}")
    for name, (fn, kw) in runs.items():
        finals = {}
        for backend in ("cython", "python"):
            res, secs = timed(fn, events=args.events, seed=args.seed, kernel_backend=backend, **kw)
            finals[backend] = res.final
            print(f"{name:<8} {backend:<8} {res.events:>8} {secs:>9.3f} {res.events / secs:>12.0f}")
        same = np.array_equal(finals["cython"], finals["python"])
        print(f"{name:<8} identical final state: {same}")


if __name__ == "__main__":
    main()
