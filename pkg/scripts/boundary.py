"""Jitter and rounding kernel distances and lattice-vs-Gaussian privacy gaps as c shrinks."""
import argparse
from pathlib import Path

from shufflelab.cli import write_rows
from shufflelab.lab import boundary_be_experiment
from shufflelab.limits import delta_comparison, write_delta_table

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--c", default="0.05,0.1,0.2,0.4")
ap.add_argument("--eps", default="0,0.5,1,2")
ap.add_argument("--out", type=Path, default=Path("results"))
args = ap.parse_args()

c_grid = [float(x) for x in args.c.split(",")]
eps = [float(x) for x in args.eps.split(",")]
args.out.mkdir(parents=True, exist_ok=True)
res = boundary_be_experiment(c_grid, eps)
write_rows(res.rows, args.out / "boundary.csv")
for name, rep in res.reports.items():
    print(f"{name:32s} slope {rep.slope:+.3f}  {'pass' if rep.verdict else 'FAIL'}")
for kind in ("poisson", "skellam"):
    rows = [delta_comparison(c, e, kind) for c in c_grid for e in eps]
    write_delta_table(rows, args.out / f"delta_table_{kind}.csv")
