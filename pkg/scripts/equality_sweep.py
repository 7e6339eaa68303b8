"""Random same-boundary pairs across the 4 asinh(1) threshold: per boundary
length, the largest |A - K| and the share of pairs with A - K > 0.1."""

import argparse
import math

import numpy as np

from thurston_kit import metrics
from thurston_kit.cli import equality_pairs
from thurston_kit._parallel import pmap

THRESHOLD = 4 * math.asinh(1.0)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=40)
    ap.add_argument("--depth", type=int, default=12)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()
    bs = sorted({*np.round(np.linspace(0.25, 3 * THRESHOLD, 12), 6), THRESHOLD})
    print("b,b_over_threshold,max_abs_diff,share_A_minus_K_over_0.1")

    def diff(pair):
        h0, h1 = pair
        return (metrics.arc_metric(h0, h1, args.depth).value
                - metrics.curve_metric(h0, h1, args.depth).value)

    for b in bs:
        d = np.array(pmap(diff, equality_pairs(b, args.samples, args.seed), args.workers))
        print(f"{b:.17g},{b / THRESHOLD:.6f},{np.abs(d).max():.17g},{np.mean(d > 0.1):.4f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
