#!/usr/bin/env python3
"""Sweep the order-2 star example: closed-form bound ingredients, the decay
rate total * sqrt(n), and (for small n) the machinery cross-check gap.

Usage:
    python scripts/j2_rate_experiment.py --n-max 200 --out j2_rate.csv
"""

import argparse
import csv
import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from radstein.bounds import J2_RATE_CONSTANT, j2_example, j2_example_machinery


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n-min", type=int, default=2)
    parser.add_argument("--n-max", type=int, default=200)
    parser.add_argument("--machinery-up-to", type=int, default=30)
    parser.add_argument("--out", default="j2_rate.csv")
    args = parser.parse_args()

    rows = []
    worst_rate = 0.0
    worst_gap = 0.0
    for n in range(args.n_min, args.n_max + 1):
        record = j2_example(n)
        rate = record.total * math.sqrt(n)
        worst_rate = max(worst_rate, rate)
        gap = ""
        if n <= args.machinery_up_to:
            machinery = j2_example_machinery(n)
            gap = max(
                abs(getattr(record, f) - getattr(machinery, f))
                for f in ("lam", "a1", "a3", "a4", "a5", "a6", "total")
            )
            worst_gap = max(worst_gap, gap)
        rows.append(
            {
                "n": n,
                "lambda": record.lam,
                "total": record.total,
                "rate": rate,
                "machinery_gap": gap,
            }
        )

    with open(args.out, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)

    print(f"wrote {len(rows)} rows to {args.out}")
    print(f"max total*sqrt(n) = {worst_rate:.6f} (constant {J2_RATE_CONSTANT:.6f})")
    print(f"max closed-form vs machinery gap = {worst_gap:.3e}")


if __name__ == "__main__":
    main()
