"""Time the jet kernels on both backends.

Usage: python benchmarks/bench_kernels.py [--orders 4 8 14] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from quartop import _kernels
from quartop._kernels import python_backend, tables


def cases(order, rng):
    n = tables.size(order)
    a, b = rng.normal(size=(2, n))
    b[0] = 2.0
    f = rng.normal(size=(order + 1, order + 1))
    x, y = rng.normal(size=(2, n)) * 0.5
    x[0] = y[0] = 0.0
    return {
        "mul": lambda be: be.mul(a, b, order),
        "div": lambda be: be.div(a, b, order),
        "compose": lambda be: be.compose(f, x, y, order),
    }


def best_time(fn, repeat):
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat, number)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--orders", type=int, nargs="+", default=[4, 8, 14])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    backends = [("python", python_backend)]
    if _kernels.compiled_backend is not None:
        backends.append(("compiled", _kernels.compiled_backend))
    else:
        print("compiled extension not built; timing the python backend only")

    rng = np.random.default_rng(0)
    print(f"{'op':<8} {'order':>5} " + " ".join(f"{name + ' (us)':>14}" for name, _ in backends) + f" {'speedup':>8}")
    for order in args.orders:
        for op, run in cases(order, rng).items():
            times = [best_time(lambda be=be: run(be), args.repeat) * 1e6 for _, be in backends]
            speedup = f"{times[0] / times[-1]:8.1f}" if len(times) > 1 else f"{'':>8}"
            print(f"{op:<8} {order:>5} " + " ".join(f"{t:14.2f}" for t in times) + f" {speedup}")


if __name__ == "__main__":
    main()
