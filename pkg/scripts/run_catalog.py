"""Geometry checks, an exact privacy curve and hybrid cf gaps for each catalog scenario."""
import argparse

import numpy as np

from shufflelab.distributions import privacy_curve
from shufflelab.lab import catalog, geometry_check, hybrid_cf_gaps
from shufflelab.transcripts import neighboring_experiment

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--n", type=int, default=40)
args = ap.parse_args()

rng = np.random.default_rng(0)
for entry in catalog():
    s = entry.scenario
    geo = geometry_check(s)
    curve = privacy_curve(neighboring_experiment(s, args.n), [0.0, 0.5, 1.0, 2.0])
    deltas = " ".join(f"{d:.4f}" for _, d, _ in curve.points)
    line = f"{entry.name:24s} geometry {'ok' if geo.passed else 'FAIL'}  delta_{args.n}(0,.5,1,2) = {deltas}"
    if s.pi_limit > 0:
        d = s.alphabet.size
        uv = [(rng.normal(size=d), rng.normal(size=d)) for _ in range(4)]
        gaps = hybrid_cf_gaps(s, [100, 1000, 10_000], uv)
        line += "  cf gaps " + " ".join(f"{g:.1e}" for g in gaps)
    print(line)
