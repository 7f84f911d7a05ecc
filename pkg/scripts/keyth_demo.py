"""Run the product comparison for every N_k certificate with [N_k/|beta|] below a cap.

For each certificate the exceptional set is built at Q = [N_k/|beta|], samples
are drawn outside it and the log product ratio is compared with
pert * sum_n 1/|P(x + n)|.
"""

import argparse
import sys
from fractions import Fraction

from tfa.engine import construct_nk, keyth_harness
from tfa.numeric import PrecisionReal, parse_complex, parse_real
from tfa.trigpoly import TrigPoly


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", default="cf:[0;1,50,1,50,...]")
    ap.add_argument("--beta", default="rat:1/1")
    ap.add_argument("--c0", default="1")
    ap.add_argument("--c1", default="1")
    ap.add_argument("--c2", default="1")
    ap.add_argument("--s", default="1/2")
    ap.add_argument("--c", default="1")
    ap.add_argument("--depth", type=int, default=40)
    ap.add_argument("--delta", default="1/10")
    ap.add_argument("--samples", type=int, default=50)
    ap.add_argument("--max-floor", type=int, default=10**4, dest="max_floor")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    alpha, beta = parse_real(args.alpha), parse_real(args.beta)
    P = TrigPoly.build(*(parse_complex(c) for c in (args.c0, args.c1, args.c2)), alpha, beta)
    nk = construct_nk(alpha, beta, Fraction(args.s), args.depth, Fraction(args.c))
    print(f"{len(nk.certificates)} certificates, misses at indices {nk.misses}")
    status = 0
    for cert in nk.certificates:
        K = (PrecisionReal.from_fraction(cert.nk) / abs(beta)).floor()
        if not 2 <= K <= args.max_floor:
            continue
        h = keyth_harness(P, cert, Fraction(args.delta), args.samples, args.seed, Fraction(args.s))
        cmp = h.comparison
        worst = max(s.log_ratio - s.log_bound for s in cmp.samples)
        print(f"N_k={cert.nk} [P_k]={K} case={h.analysis.case} "
              f"|E|={float(h.analysis.exceptional.measure):.4f} pert={cmp.perturbation:.3e} "
              f"max(log ratio - log bound)={worst:.4f} identity={cmp.identity_ok} "
              f"passed={cmp.passed}")
        status |= not (cmp.passed and cmp.identity_ok)
    return status


if __name__ == "__main__":
    sys.exit(main())
