"""Projected quotient error vs n for every catalog scenario with a compound-Poisson limit."""
import argparse
from pathlib import Path

from shufflelab.cli import write_rows
from shufflelab.lab import catalog, projected_rate_experiment

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--n-max", type=int, default=512)
ap.add_argument("--jobs", type=int, default=1)
ap.add_argument("--out", type=Path, default=Path("results"))
args = ap.parse_args()

grid = [n for n in (8, 16, 32, 64, 128, 256, 512, 1024) if n <= args.n_max]
args.out.mkdir(parents=True, exist_ok=True)
for entry in catalog():
    if entry.name in ("obstruction", "sharpness"):
        continue
    res = projected_rate_experiment(entry.scenario, grid, jobs=args.jobs)
    rep = res.reports["tv_sum"]
    write_rows(res.rows, args.out / f"projected_rate_{entry.name}.csv")
    print(f"{entry.name:24s} slope {rep.slope:+.4f}  {'pass' if res.passed else 'FAIL'}")
