"""Compiled core against the NumPy fallback.

    python3 benchmarks/bench_core.py [--replicas R] [--repeat K]

Prints best-of-K wall times and checks that both backends agree.
"""
import argparse
import timeit

import numpy as np

from dtasep import _core_py, core


def cases(replicas: int):
    rng = np.random.default_rng(0)
    y0 = np.array([6, 4, 3, 0, -2, -5], dtype=np.int64)
    prob = rng.uniform(0.1, 0.9, size=(8, y0.size))
    u = rng.random((replicas, 8, y0.size))
    odds = rng.uniform(0.1, 2.0, size=(4, 4))
    y4 = np.array([3, 1, 0, -2], dtype=np.int64)
    return {
        "simulate_batch": ((y0, prob, u), np.array_equal),
        "endpoint_weights": ((y4, odds), lambda a, b: np.allclose(a, b, rtol=1e-12, atol=0)),
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--replicas", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not core.HAVE_COMPILED:
        print("compiled core not built; nothing to compare")
        return
    print(f"{'kernel':<18}{'compiled s':>12}{'fallback s':>12}{'speedup':>10}  agree")
    for name, (inputs, same) in cases(args.replicas).items():
        fast, slow = getattr(core.compiled, name), getattr(_core_py, name)
        tf = min(timeit.repeat(lambda: fast(*inputs), number=1, repeat=args.repeat))
        ts = min(timeit.repeat(lambda: slow(*inputs), number=1, repeat=args.repeat))
        print(f"{name:<18}{tf:>12.4f}{ts:>12.4f}{ts / tf:>10.1f}  {same(fast(*inputs), slow(*inputs))}")


if __name__ == "__main__":
    main()
