"""Sample uniform random x and record the growth proxy max_k q_{k+1}/(q_k ln q_k).

Writes one row per sample and prints the fraction above the threshold.
"""

import argparse
import csv
import sys

import numpy as np

from tfa.engine import full_measure_experiment


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--depth", type=int, default=60)
    ap.add_argument("--digits", type=int, default=256)
    ap.add_argument("--threshold", type=float, default=0.1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None, help="CSV of per-sample proxies")
    args = ap.parse_args(argv)

    r = full_measure_experiment(args.samples, args.depth, args.digits, args.threshold, args.seed)
    proxies = np.asarray(r["proxies"])
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["sample", "proxy"])
            w.writerows(enumerate(proxies.tolist()))
    print(f"samples={r['samples']} depth={r['depth']} threshold={r['threshold']}")
    print(f"fraction above threshold: {r['fraction']:.3f}")
    print(f"proxy quartiles: {np.percentile(proxies, [25, 50, 75]).round(3).tolist()}")
    return 0 if r["fraction"] >= 0.9 else 1


if __name__ == "__main__":
    sys.exit(main())
