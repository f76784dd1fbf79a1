"""Sampled check of every lemma against the suite transforms, at several scales.

    python3 scripts/lemma_sweep.py --n 10000 --scales 0.01,1,100
"""

import argparse
import time

from quadineq import lemmas as L


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--scales", default="1")
    ap.add_argument("--show", choices=("all", "failures", "worst"), default="worst")
    args = ap.parse_args()

    t0 = time.perf_counter()
    for scale in (float(s) for s in args.scales.split(",")):
        reports = [
            L.sample_lemma(lid, t, args.n, args.seed, scale)
            for lid in L.LEMMA_IDS for t in L.suite_transforms() if L.applicable(lid, t)
        ]
        failed = [r for r in reports if not r.passed]
        print(f"scale {scale:g}: {len(reports)} pairs, {len(failed)} failed")
        if args.show == "all":
            shown = reports
        elif args.show == "failures":
            shown = failed
        else:
            shown = sorted(reports, key=lambda r: r.worst_residual)[-5:]
        for r in shown:
            print(f"  {r.lemma_id:18s} {r.transform:16s} {r.worst_residual: .3e}  {r.worst_inputs}")
    print(f"{time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
