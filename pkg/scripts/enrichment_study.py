#!/usr/bin/env python3
"""Compare plain LHS against density-guided resampling near the boundary.

For a few seeds, draw a labeled base design, run one adaptive round, and
tabulate how many of the new points land in the safety-critical band of the
minimum compliance factor.
"""

import argparse

import numpy as np

from bridgetriage.domain import default_schema, generate_dataset
from bridgetriage.sampling import adaptive_resample, lhs_sample, scale_to_schema


def band_fraction(ds, lo=0.5, hi=1.5) -> float:
    emin = ds.y.min(axis=1)
    return float(np.mean((emin >= lo) & (emin <= hi)))


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--n-base", type=int, default=2000)
    ap.add_argument("--n-new", type=int, default=500)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--band", type=float, default=0.25)
    args = ap.parse_args()

    schema = default_schema()
    print(f"{'seed':>4}  {'lhs frac':>8}  {'adaptive frac':>13}  {'mean|emin-1| lhs':>16}  {'adaptive':>8}")
    for s in range(args.seeds):
        base = generate_dataset(
            schema, scale_to_schema(lhs_sample(args.n_base, schema.k, 100 + s), schema))
        adaptive = generate_dataset(
            schema, adaptive_resample(base, args.n_new, 200 + s, schema,
                                      band=args.band))
        plain = generate_dataset(
            schema, scale_to_schema(lhs_sample(args.n_new, schema.k, 300 + s), schema))
        d_a = float(np.mean(np.abs(adaptive.y.min(axis=1) - 1.0)))
        d_l = float(np.mean(np.abs(plain.y.min(axis=1) - 1.0)))
        print(f"{s:>4}  {band_fraction(plain):>8.3f}  {band_fraction(adaptive):>13.3f}"
              f"  {d_l:>16.3f}  {d_a:>8.3f}")


if __name__ == "__main__":
    main()
