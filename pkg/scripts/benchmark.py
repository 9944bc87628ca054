"""Time scenario generation for the joint normal transform and the d-vine.

    python3 scripts/benchmark.py --vars 10 --count 100000 --threads 1 4
"""

import argparse
import time

import numpy as np

from copulascen.dependence import RankCorrelationMatrix, copula_sigma_to_rank, to_copula_matrix
from copulascen.marginals import fit_empirical
from copulascen.pipeline import ModelBundle, generate_scenarios
from copulascen.vine import dvine_from_rank_matrix


def random_rank_matrix(n, seed):
    a = np.random.default_rng(seed).standard_normal((n, 3 * n))
    c = a @ a.T
    d = np.sqrt(np.diag(c))
    c = np.clip(c / np.outer(d, d), -1.0, 1.0)
    np.fill_diagonal(c, 1.0)
    r = copula_sigma_to_rank(c)
    r = 0.5 * (r + r.T)
    np.fill_diagonal(r, 1.0)
    return r


def bundles(n, history, seed):
    names = tuple(f"v{i}" for i in range(n))
    rng = np.random.default_rng(seed)
    margs = tuple(fit_empirical(name, rng.gamma(2.0, size=history)) for name in names)
    r = RankCorrelationMatrix(names, random_rank_matrix(n, seed))
    yield "jnt", ModelBundle(names, margs, r, "jnt", copula_matrix=to_copula_matrix(r))
    yield "dvine", ModelBundle(names, margs, r, "dvine", dvine=dvine_from_rank_matrix(r, list(names)))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--vars", type=int, default=10)
    ap.add_argument("--count", type=int, default=100_000)
    ap.add_argument("--history", type=int, default=10_000)
    ap.add_argument("--threads", type=int, nargs="+", default=[1, 4])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    print(f"{'model':<6} {'threads':>7} {'best s':>8} {'rows/s':>12}")
    for kind, bundle in bundles(args.vars, args.history, 1):
        for t in args.threads:
            best = float("inf")
            for _ in range(args.repeat):
                t0 = time.perf_counter()
                generate_scenarios(bundle, args.count, 42, threads=t)
                best = min(best, time.perf_counter() - t0)
            print(f"{kind:<6} {t:>7} {best:>8.3f} {args.count / best:>12.0f}")


if __name__ == "__main__":
    main()
