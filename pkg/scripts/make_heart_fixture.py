"""Generate the bundled heart-disease-style surrogate dataset.

The marginals and per-class conditionals follow the public 918-row heart
failure prediction table (508 positive cases), including its placeholder
zeros in Cholesterol. Features are drawn independently given the class.

    python3 scripts/make_heart_fixture.py [output.csv] [--seed N]
"""

from __future__ import annotations

import argparse
import csv
from pathlib import Path

import numpy as np

N_ROWS, N_POSITIVE = 918, 508
DEFAULT_OUT = Path(__file__).resolve().parents[1] / "src" / "arborist" / "data" / "heart.csv"

# per class (negative, positive): option -> probability
CATEGORICAL = {
    "Sex": ({"M": 0.65, "F": 0.35}, {"M": 0.90, "F": 0.10}),
    "ChestPainType": (
        {"ASY": 0.25, "NAP": 0.32, "ATA": 0.37, "TA": 0.06},
        {"ASY": 0.77, "NAP": 0.14, "ATA": 0.05, "TA": 0.04},
    ),
    "FastingBS": ({"0": 0.89, "1": 0.11}, {"0": 0.67, "1": 0.33}),
    "RestingECG": (
        {"Normal": 0.65, "LVH": 0.20, "ST": 0.15},
        {"Normal": 0.56, "LVH": 0.21, "ST": 0.23},
    ),
    "ExerciseAngina": ({"N": 0.87, "Y": 0.13}, {"N": 0.38, "Y": 0.62}),
    "ST_Slope": (
        {"Up": 0.77, "Flat": 0.19, "Down": 0.04},
        {"Up": 0.15, "Flat": 0.75, "Down": 0.10},
    ),
}
COLUMNS = [
    "Age", "Sex", "ChestPainType", "RestingBP", "Cholesterol", "FastingBS",
    "RestingECG", "MaxHR", "ExerciseAngina", "Oldpeak", "ST_Slope", "HeartDisease",
]


def _choice(rng, probs: dict, size: int) -> np.ndarray:
    keys = list(probs)
    p = np.array([probs[k] for k in keys])
    return np.array(keys, dtype=object)[rng.choice(len(keys), size, p=p / p.sum())]


def _normal_int(rng, mean, sd, lo, hi, size):
    return np.clip(np.round(rng.normal(mean, sd, size)), lo, hi).astype(int)


def generate(seed: int = 2023) -> list[dict]:
    rng = np.random.default_rng(seed)
    y = np.zeros(N_ROWS, dtype=int)
    y[rng.choice(N_ROWS, N_POSITIVE, replace=False)] = 1
    cols: dict[str, np.ndarray] = {"HeartDisease": y}
    for name in COLUMNS[:-1]:
        cols[name] = np.empty(N_ROWS, dtype=object)
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        n = len(idx)
        for name, dists in CATEGORICAL.items():
            cols[name][idx] = _choice(rng, dists[cls], n)
        cols["Age"][idx] = _normal_int(rng, (50.6, 55.9)[cls], (9.4, 8.7)[cls], 28, 77, n)
        cols["RestingBP"][idx] = _normal_int(rng, (130.2, 134.2)[cls], (16.5, 19.8)[cls], 80, 200, n)
        chol = _normal_int(rng, (238.0, 251.0)[cls], (55.0, 60.0)[cls], 85, 603, n)
        chol[rng.random(n) < (0.05, 0.30)[cls]] = 0
        cols["Cholesterol"][idx] = chol
        cols["MaxHR"][idx] = _normal_int(rng, (148.2, 127.7)[cls], (23.3, 23.4)[cls], 60, 202, n)
        peak = rng.gamma(2.0, (0.5, 0.85)[cls], n)
        peak[rng.random(n) < (0.6, 0.25)[cls]] = 0.0
        cols["Oldpeak"][idx] = np.round(np.minimum(peak, 6.2), 1)
    cols["RestingBP"][rng.integers(N_ROWS)] = 0  # the source table has one such placeholder
    return [{c: cols[c][i] for c in COLUMNS} for i in range(N_ROWS)]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", nargs="?", default=str(DEFAULT_OUT))
    ap.add_argument("--seed", type=int, default=2023)
    args = ap.parse_args()
    rows = generate(args.seed)
    with open(args.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            r = dict(r)
            r["Oldpeak"] = f"{r['Oldpeak']:.1f}"
            w.writerow(r)
    print(f"wrote {len(rows)} rows to {args.out}")


if __name__ == "__main__":
    main()
