"""Empirical convergence rate of tau-Frechet means on Gaussian and contaminated data.

    python3 scripts/rate_experiment.py --reps 32 --n-list 100,400,1600,6400
"""

import argparse

from quadineq import frechet as F
from quadineq import transforms as T


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-list", default="100,400,1600")
    ap.add_argument("--reps", type=int, default=16)
    ap.add_argument("--dim", type=int, default=2)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    n_list = [int(n) for n in args.n_list.split(",")]
    transforms = [T.power(2.0), T.power(1.5), T.power(1.0), T.huber(1.0), T.pseudo_huber(1.0)]
    print("transform,dist,slope," + ",".join(f"err@{n}" for n in n_list))
    for dist in F.DISTRIBUTIONS:
        for t in transforms:
            res = F.rate_experiment(t, dist, n_list, args.reps, args.seed, args.dim, args.threads)
            errs = ",".join(f"{r.mean_error:.4g}" for r in res.rows)
            print(f"{t.name},{dist},{res.slope:.3f},{errs}")


if __name__ == "__main__":
    main()
