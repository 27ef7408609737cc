"""Compare the compiled and NumPy kernels on the two measurement loops.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from pqkilian import kernels
from pqkilian.quantum.core import random_projector, random_state
from pqkilian.rewinding import GameModel, RankOneStrategy


def impls():
    out = {"python": kernels.backend("python")}
    try:
        out["compiled"] = kernels.backend("compiled")
    except ImportError:
        print("compiled extension not built; timing the NumPy kernels only")
    return out


def bench_dense(impl, dim, steps, repeat):
    g = np.random.default_rng(0)
    PA, PB = random_projector(dim, dim // 2, g), random_projector(dim, dim // 2, g)
    v = PB @ random_state(dim, g)
    v /= np.linalg.norm(v)
    u = g.random(steps)
    t = timeit.repeat(lambda: kernels.dense_alternate(PA, PB, v, u, impl=impl),
                      number=1, repeat=repeat)
    return min(t)


def bench_workspace(impl, questions, pairs, repeat):
    model = GameModel(RankOneStrategy(questions, 0.5))
    G, u = model.workspace
    X = np.outer(u, model.strategy.initial_state()).ravel()
    unif = np.random.default_rng(1).random(2 * pairs)
    t = timeit.repeat(lambda: kernels.workspace_alternate(G, u, X.copy(), model.dim, pairs,
                                                          False, unif, impl=impl),
                      number=1, repeat=repeat)
    return min(t)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    cases = [
        ("dense D=8, 400 steps", lambda m: bench_dense(m, 8, 400, args.repeat)),
        ("dense D=32, 400 steps", lambda m: bench_dense(m, 32, 400, args.repeat)),
        ("workspace |R|=16, 369 pairs", lambda m: bench_workspace(m, 16, 369, args.repeat)),
        ("workspace |R|=64, 369 pairs", lambda m: bench_workspace(m, 64, 369, args.repeat)),
    ]
    backends = impls()
    print(f"{'case':<30}" + "".join(f"{name:>12}" for name in backends) + "    speedup")
    for label, fn in cases:
        times = {name: fn(m) for name, m in backends.items()}
        row = f"{label:<30}" + "".join(f"{times[n] * 1e3:>10.2f}ms" for n in backends)
        if "compiled" in times:
            row += f"    {times['python'] / times['compiled']:.1f}x"
        print(row)


if __name__ == "__main__":
    main()
