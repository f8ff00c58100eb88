"""Compare the compiled and pure-numpy split-search kernels.

Usage: python benchmarks/bench_kernels.py [--repeat N]

For each problem size it checks that both kernels return the same split,
then times a bare split search and a full boosted-stumps fit.
"""

import argparse
import sys
import timeit

import numpy as np

from hybridtransfer import kernels
from hybridtransfer.core import Hyperparams
from hybridtransfer.weighted_learner import fit_stumps, training_set_from_masses

SIZES = [(1_000, 10), (5_200, 10), (20_000, 20)]


def _problem(n, d, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = (X[:, 0] + rng.normal(size=n) > 1.5).astype(float)
    mass = rng.uniform(0.1, 2.0, n)
    return X, y, mass


def _split_inputs(X, y):
    order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T.astype(np.int64))
    vals = np.ascontiguousarray(np.take_along_axis(X, order.T, axis=0).T)
    p = np.full(X.shape[0], y.mean())
    w = np.full(X.shape[0], 1.0 / X.shape[0])
    return vals, order, w * (p - y), w * p * (1 - p)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5, help="timing repetitions (best is reported)")
    ap.add_argument("--rounds", type=int, default=50, help="boosting rounds for the full-fit timing")
    args = ap.parse_args(argv)

    compiled = kernels.compiled_best_split()
    if compiled is None:
        print("compiled kernel not built; run `pip install -e . --no-build-isolation` first")
        return 1
    python = kernels.python_best_split
    hp = Hyperparams(boosting_rounds=args.rounds)

    print(f"{'n':>7} {'d':>3} {'split py (ms)':>14} {'split cy (ms)':>14} {'speedup':>8} "
          f"{'fit py (s)':>11} {'fit cy (s)':>11} {'speedup':>8} identical")
    for n, d in SIZES:
        X, y, mass = _problem(n, d)
        vals, order, g, h = _split_inputs(X, y)
        same_split = python(vals, order, g, h, 1e-6) == compiled(vals, order, g, h, 1e-6)
        t_py = min(timeit.repeat(lambda: python(vals, order, g, h, 1e-6), number=1, repeat=args.repeat))
        t_cy = min(timeit.repeat(lambda: compiled(vals, order, g, h, 1e-6), number=1, repeat=args.repeat))

        ts = training_set_from_masses(X, y, mass)
        m_py = fit_stumps(ts, hp, split_fn=python)
        m_cy = fit_stumps(ts, hp, split_fn=compiled)
        same_fit = m_py.stumps == m_cy.stumps and m_py.base_score == m_cy.base_score
        f_py = min(timeit.repeat(lambda: fit_stumps(ts, hp, split_fn=python), number=1, repeat=max(1, args.repeat // 2)))
        f_cy = min(timeit.repeat(lambda: fit_stumps(ts, hp, split_fn=compiled), number=1, repeat=max(1, args.repeat // 2)))
        print(f"{n:>7} {d:>3} {1e3 * t_py:>14.2f} {1e3 * t_cy:>14.2f} {t_py / t_cy:>7.1f}x "
              f"{f_py:>11.3f} {f_cy:>11.3f} {f_py / f_cy:>7.1f}x {same_split and same_fit}")
        if not (same_split and same_fit):
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
