#!/usr/bin/env python3
"""nDCG@5 of the full model as the content-regularization weight varies.

Weight 0 drops the word-overlap coupling entirely; the curve shows how
much of the planted cross-modal signal that coupling recovers.
"""
import argparse

from codetrace.synthetic import content_weight_sweep


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--weights", type=float, nargs="+",
                        default=[0.0, 0.05, 0.1, 0.2, 0.4, 0.8])
    parser.add_argument("--alpha", type=float, default=0.5,
                        help="text/code mixing weight at ranking time")
    return parser.parse_args()


def main() -> None:
    args = parse_args()
    curve = content_weight_sweep(args.seed, tuple(args.weights),
                                 alpha=args.alpha)
    print("weight\tndcg@5")
    for weight in args.weights:
        print(f"{weight:g}\t{curve[weight]:.4f}")


if __name__ == "__main__":
    main()
