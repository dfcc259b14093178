#!/usr/bin/env python3
"""Sweep the linear smoothing ratio over frequency scales, for a few p.

Prints one fit line per p and writes nothing; use the CLI with a config from
configs/ when you want CSV/JSON artifacts.
"""

import argparse

import numpy as np

from modlab.estimates import ExperimentConfig, sdec, smoothing_ratio


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d", type=int, default=1)
    ap.add_argument("--n", type=int, default=2048)
    ap.add_argument("--length", type=float, default=8 * np.pi)
    ap.add_argument("--family", default="focusing")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--time-nodes", type=int, default=2049)
    ap.add_argument("--scales", type=float, nargs="+", default=[4.0, 8.0, 16.0, 32.0])
    ap.add_argument("--p", type=float, nargs="+", default=[4.0, 6.0, 8.0])
    args = ap.parse_args()

    for p in args.p:
        cfg = ExperimentConfig(
            d=args.d,
            n=args.n,
            length=args.length,
            scales=tuple(args.scales),
            family=args.family,
            seed=args.seed,
            p=p,
            time_nodes=args.time_nodes,
        )
        fit = smoothing_ratio(cfg)
        print(
            f"p={p:4.1f}: slope {fit.slope:+.4f}  predicted 2*sdec = "
            f"{2 * sdec(p, args.d):.4f}  margin {fit.margin}  "
            f"{'pass' if fit.passed else 'FAIL'}  ratios "
            f"{['%.4f' % r for r in fit.ratios]}"
        )


if __name__ == "__main__":
    main()
