#!/usr/bin/env python3
"""Decoupling ratio D(R) over a radius sweep for several integrabilities."""

import argparse

from modlab.estimates import ExperimentConfig, decoupling_ratio, sdec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d", type=int, default=1, choices=(1, 2))
    ap.add_argument("--scales", type=float, nargs="+", default=[16.0, 64.0, 256.0])
    ap.add_argument("--p", type=float, nargs="+", default=[6.0, 8.0, 10.0])
    ap.add_argument("--profile", default="constant")
    args = ap.parse_args()

    for p in args.p:
        cfg = ExperimentConfig(
            d=args.d,
            scales=tuple(args.scales),
            p=p,
            profile=args.profile,
            margin=0.2,
        )
        fit = decoupling_ratio(cfg)
        print(
            f"p={p:5.2f}: slope {fit.slope:+.4f}  sdec = {sdec(p, args.d):+.4f}  "
            f"caps {fit.meta['caps']}  {'pass' if fit.passed else 'FAIL'}"
        )


if __name__ == "__main__":
    main()
