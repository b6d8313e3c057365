"""Command-line front end.

Exit codes: 0 when every declared check passes, 2 when a check fails, 1 on
bad input or an exhausted resource budget.  Reports go to ``--out`` (or the
``SHUFFLELAB_OUT`` environment variable) as ``<subcommand>.json`` and
``<subcommand>.csv``.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .distributions import BinaryExperiment, ResourceLimitError, privacy_curve
from .lab import (
    LabResult,
    auxiliary_rate_experiment,
    binomial_bernoulli_check,
    boundary_be_experiment,
    catalog,
    catalog_entry,
    full_privacy_convergence,
    geometry_check,
    obstruction_experiment,
    projected_rate_experiment,
    sharpness_scenario,
)
from .transcripts import (
    RandomizerScenario,
    load_scenario,
    neighboring_experiment,
    sample_transcripts,
    transcript_law,
    write_transcript_csv,
)

SUBCOMMANDS = (
    "geometry", "transcript", "privacy-curve", "projected-rate", "full-privacy",
    "sharpness", "binom-ber", "boundary-be", "obstruction", "catalog",
)
OUT_ENV = "SHUFFLELAB_OUT"


class InputError(ValueError):
    pass


def parse_grid(text: str, kind=float) -> list:
    """Comma list, or ``start:stop:factor`` for a geometric range including both ends when hit."""
    text = text.strip()
    if not text:
        raise InputError("empty grid")
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise InputError(f"geometric range {text!r} must be start:stop:factor")
        start, stop, factor = (float(x) for x in parts)
        if start <= 0 or stop <= 0 or factor <= 0 or factor == 1:
            raise InputError(f"bad geometric range {text!r}")
        out, x = [], start
        up = factor > 1
        while (x <= stop * (1 + 1e-12)) if up else (x >= stop * (1 - 1e-12)):
            out.append(kind(round(x)) if kind is int else kind(x))
            x *= factor
        if not out:
            raise InputError(f"geometric range {text!r} is empty")
        return out
    try:
        return [kind(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise InputError(f"cannot parse grid {text!r}: {exc}") from None


@dataclass
class RunConfig:
    subcommand: str
    scenario: str | None = None
    n_grid: list[int] = field(default_factory=list)
    k: int | None = None
    c_grid: list[float] = field(default_factory=list)
    eps_grid: list[float] = field(default_factory=list)
    m_grid: list[int] = field(default_factory=list)
    p: float = 0.3
    q: float = 0.8
    lam: float = 1.0
    pi: float = 0.5
    kappa: float = 0.0
    slope_max: float | None = None
    samples: int = 0
    prune: float = 1e-14
    tol: float = 1e-8
    seed: int = 0
    jobs: int = 1
    out: Path = Path(".")

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise InputError(f"unknown subcommand {self.subcommand!r}")
        for name in ("prune", "tol"):
            v = getattr(self, name)
            if not 0 < v <= 1e-6:
                raise InputError(f"--{name} must lie in (0, 1e-6], got {v!r}")
        if self.jobs < 1:
            raise InputError("--jobs must be positive")
        if not 0 <= self.seed < 2**64:
            raise InputError("--seed must be a 64-bit unsigned integer")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="shufflelab", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--scenario", help="scenario JSON file or catalog name")
    ap.add_argument("--n", dest="n_grid", help="population sizes (list or start:stop:factor)")
    ap.add_argument("--k", type=int, help="number of ones (transcript only; default k_n)")
    ap.add_argument("--c", dest="c_grid", help="boundary scales c")
    ap.add_argument("--eps", dest="eps_grid", help="privacy levels epsilon")
    ap.add_argument("--m", dest="m_grid", help="binomial sizes m")
    ap.add_argument("--p", type=float, default=0.3)
    ap.add_argument("--q", type=float, default=0.8)
    ap.add_argument("--lam", type=float, default=1.0)
    ap.add_argument("--pi", type=float, default=0.5)
    ap.add_argument("--kappa", type=float, default=0.0, help="tilt of the zero-users' split in the sharpness array")
    ap.add_argument("--slope-max", type=float, help="override the declared slope threshold")
    ap.add_argument("--samples", type=int, default=0, help="Monte Carlo draws written next to a transcript law")
    ap.add_argument("--prune", type=float, default=1e-14)
    ap.add_argument("--tol", type=float, default=1e-8)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", help=f"output directory (default ${OUT_ENV} or the working directory)")
    return ap


def config_from_args(argv: Sequence[str]) -> RunConfig:
    ns = build_parser().parse_args(argv)
    out = ns.out or os.environ.get(OUT_ENV) or "."
    return RunConfig(
        subcommand=ns.subcommand,
        scenario=ns.scenario,
        n_grid=parse_grid(ns.n_grid, int) if ns.n_grid else [],
        k=ns.k,
        c_grid=parse_grid(ns.c_grid) if ns.c_grid else [],
        eps_grid=parse_grid(ns.eps_grid) if ns.eps_grid else [],
        m_grid=parse_grid(ns.m_grid, int) if ns.m_grid else [],
        p=ns.p, q=ns.q, lam=ns.lam, pi=ns.pi, kappa=ns.kappa,
        slope_max=ns.slope_max, samples=ns.samples,
        prune=ns.prune, tol=ns.tol, seed=ns.seed, jobs=ns.jobs, out=Path(out),
    )


def resolve_scenario(ref: str | None) -> RandomizerScenario:
    if not ref:
        raise InputError("--scenario is required")
    if os.path.exists(ref):
        try:
            return load_scenario(ref)
        except json.JSONDecodeError as exc:
            raise InputError(f"malformed scenario JSON {ref}: {exc}") from None
    try:
        return catalog_entry(ref).scenario
    except KeyError:
        raise InputError(f"unknown scenario {ref!r}: neither a file nor a catalog name") from None


def _need(grid: list, flag: str, default: list | None = None) -> list:
    if grid:
        return grid
    if default is not None:
        return default
    raise InputError(f"{flag} is required")


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_rows(rows: list[dict], path: Path) -> None:
    cols: list[str] = []
    for r in rows:
        cols.extend(k for k in r if k not in cols)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_cell(r.get(c)) for c in cols])


def _json_default(obj):
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def emit(result: LabResult, cfg: RunConfig) -> None:
    cfg.out.mkdir(parents=True, exist_ok=True)
    stem = cfg.subcommand
    doc = result.to_json()
    doc["config"] = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(cfg).items()}
    (cfg.out / f"{stem}.json").write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n",
                                          encoding="utf-8")
    write_rows(result.rows, cfg.out / f"{stem}.csv")


def _summary(result: LabResult) -> str:
    lines = []
    for name, ok in result.checks.items():
        lines.append(f"  check {name}: {'pass' if ok else 'FAIL'}")
    for name, rep in result.reports.items():
        slope = "exact" if math.isnan(rep.slope) else f"{rep.slope:.4f}"
        lines.append(f"  fit {name}: slope {slope} window {list(rep.window)} -> {'pass' if rep.verdict else 'FAIL'}")
    return "\n".join(lines)


def _transcript(cfg: RunConfig) -> LabResult:
    scenario = resolve_scenario(cfg.scenario)
    n = _need(cfg.n_grid, "--n")[0]
    k = scenario.k_n(n) if cfg.k is None else cfg.k
    t = transcript_law(scenario, n, k, cfg.prune)
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_transcript_csv(t, scenario.alphabet, cfg.out / "transcript_law.csv")
    sums_ok = bool((t.law.keys.sum(axis=1) == n).all())
    mass_ok = abs(t.law.total_mass + t.law.deficit - 1) <= 1e-12
    rows = [{"n": n, "k": k, "atoms": len(t.law), "total_mass": t.law.total_mass, "total_mass_err": t.law.deficit}]
    if cfg.samples:
        draws = sample_transcripts(scenario, n, k, cfg.seed, cfg.samples)
        with open(cfg.out / "transcript_samples.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(scenario.alphabet.symbols)
            w.writerows(draws.tolist())
    return LabResult("transcript", rows, {}, {"key_sums": sums_ok, "mass_conservation": mass_ok},
                     {"scenario": scenario.name})


def _privacy_curve(cfg: RunConfig) -> LabResult:
    scenario = resolve_scenario(cfg.scenario)
    n = _need(cfg.n_grid, "--n")[0]
    exp: BinaryExperiment = neighboring_experiment(scenario, n, cfg.prune)
    curve = privacy_curve(exp, _need(cfg.eps_grid, "--eps"))
    rows = [{"n": n, "epsilon": e, "delta": d, "delta_err": r} for e, d, r in curve.points]
    return LabResult("privacy-curve", rows, {}, {"monotone": curve.is_monotone()}, {"scenario": scenario.name})


def dispatch(cfg: RunConfig) -> LabResult:
    sc = cfg.subcommand
    if sc == "geometry":
        return geometry_check(resolve_scenario(cfg.scenario))
    if sc == "transcript":
        return _transcript(cfg)
    if sc == "privacy-curve":
        return _privacy_curve(cfg)
    if sc == "projected-rate":
        s = resolve_scenario(cfg.scenario)
        return projected_rate_experiment(s, _need(cfg.n_grid, "--n", [8, 16, 32, 64, 128, 256, 512]), cfg.prune,
                                         cfg.tol, -0.9 if cfg.slope_max is None else cfg.slope_max, cfg.jobs)
    if sc == "full-privacy":
        s = resolve_scenario(cfg.scenario)
        return full_privacy_convergence(s, _need(cfg.n_grid, "--n", [16, 32, 64, 128, 256]),
                                        _need(cfg.eps_grid, "--eps", [0.0, 0.5, 1.0, 2.0]), cfg.prune, cfg.tol,
                                        -0.4 if cfg.slope_max is None else cfg.slope_max, cfg.jobs)
    if sc == "sharpness":
        s = sharpness_scenario(cfg.p, cfg.q, cfg.lam, cfg.pi, cfg.kappa)
        n_grid = _need(cfg.n_grid, "--n", [32, 64, 128, 256])
        if cfg.q == cfg.p:
            window = (-math.inf, -0.9 if cfg.slope_max is None else cfg.slope_max)
            return auxiliary_rate_experiment(s, n_grid, cfg.prune, window, None, cfg.jobs)
        return auxiliary_rate_experiment(s, n_grid, cfg.prune, (-0.65, -0.35), 2.0, cfg.jobs)
    if sc == "binom-ber":
        return binomial_bernoulli_check(_need(cfg.m_grid, "--m"), cfg.p, cfg.q)
    if sc == "boundary-be":
        return boundary_be_experiment(_need(cfg.c_grid, "--c", [0.4, 0.2, 0.1, 0.05]),
                                      _need(cfg.eps_grid, "--eps", [1.0]), tol=min(cfg.tol, 1e-10))
    if sc == "obstruction":
        return obstruction_experiment(_need(cfg.n_grid, "--n", [1, 2, 5, 10, 20]),
                                      _need(cfg.eps_grid, "--eps", [0.0, 0.5, 1.0, 2.0]), cfg.prune)
    rows = [{"name": e.name, "alphabet": " ".join(e.scenario.alphabet.symbols),
             "expected": json.dumps(dict(e.expected), sort_keys=True)} for e in catalog()]
    return LabResult("catalog", rows, {}, {}, {"scenarios": [e.scenario.to_json() for e in catalog()]})


def run(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    stage = "arguments"
    try:
        cfg = config_from_args(argv)
        stage = cfg.subcommand
        result = dispatch(cfg)
        stage = "output"
        emit(result, cfg)
    except SystemExit as exc:  # argparse usage errors
        return 1 if exc.code else 0
    except (InputError, ValueError, KeyError, OSError) as exc:
        print(f"error [{stage}]: {exc}", file=sys.stderr)
        return 1
    except (ResourceLimitError, MemoryError) as exc:
        print(f"error [{stage}]: resource limit: {exc}", file=sys.stderr)
        return 1
    if cfg.subcommand == "catalog":
        for r in result.rows:
            print(f"{r['name']}: {r['expected']}")
    else:
        print(f"{cfg.subcommand}: {'pass' if result.passed else 'FAIL'}")
        text = _summary(result)
        if text:
            print(text)
    return 0 if result.passed else 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
