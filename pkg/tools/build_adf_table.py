"""Regenerate src/saetrade/_adf_table.py from a Monte Carlo run.

Usage:
    python tools/build_adf_table.py [--reps 400000] [--seed 20240501]
"""

import argparse
import logging
from pathlib import Path

import numpy as np

from saetrade.adf import simulate_tau_quantiles

SIZES = [25, 50, 100, 250, 500, 1000, 2500]
LEVELS = [
    0.001, 0.0025, 0.005, 0.01, 0.025, 0.05, 0.075, 0.10, 0.125, 0.15,
    0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50, 0.55, 0.60, 0.65, 0.70,
    0.75, 0.80, 0.85, 0.90, 0.925, 0.95, 0.975, 0.99, 0.995, 0.999,
]

OUT = Path(__file__).resolve().parent.parent / "src" / "saetrade" / "_adf_table.py"


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--reps", type=int, default=400_000)
    parser.add_argument("--seed", type=int, default=20240501)
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO)

    q = simulate_tau_quantiles(SIZES, LEVELS, args.reps, seed=args.seed)

    # asymptotic row: q(n) = a + b/n + c/n^2 fitted on n >= 50
    mask = np.array(SIZES) >= 50
    inv = 1.0 / np.array(SIZES, dtype=float)
    A = np.column_stack([np.ones(mask.sum()), inv[mask], inv[mask] ** 2])
    coef, *_ = np.linalg.lstsq(A, q[mask], rcond=None)
    asym = coef[0]

    rows = [asym] + [q[i] for i in range(len(SIZES) - 1, -1, -1)]
    inv_nobs = [0.0] + [1.0 / n for n in reversed(SIZES)]
    for r in rows:
        assert np.all(np.diff(r) > 0), "quantiles must increase with level"

    lines = [
        '"""Dickey-Fuller tau quantiles, constant-only regression.',
        "",
        f"Generated by tools/build_adf_table.py (reps={args.reps}, seed={args.seed}).",
        "Rows follow INV_NOBS (1/nobs, ascending; the first row is the",
        "fitted asymptotic limit). Columns follow LEVELS.",
        '"""',
        "",
        f"LEVELS = {LEVELS!r}",
        "",
        f"NOBS = {[None] + list(reversed(SIZES))!r}",
        "",
        "INV_NOBS = [" + ", ".join(repr(float(v)) for v in inv_nobs) + "]",
        "",
        "QUANTILES = [",
    ]
    for r in rows:
        lines.append("    [" + ", ".join(f"{v:.5f}" for v in r) + "],")
    lines.append("]")
    OUT.write_text("\n".join(lines) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
