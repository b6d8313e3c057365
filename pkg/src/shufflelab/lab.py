"""Experiment runner: grids, rate fits, the auxiliary common-factor experiment and the scenario catalog."""
from __future__ import annotations

import cmath
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from .distributions import (
    DEFAULT_PRUNE,
    BinaryExperiment,
    DiscreteDistribution,
    Estimate,
    privacy_delta,
    tv_distance,
)
from .geometry import AlphabetSpec, DominantStructure, geometry_residuals, hybrid_limit_cf
from .limits import (
    delta_comparison,
    jitter_tv_to_gaussian,
    projected_limit_experiment,
    rounding_tv_to_poisson,
)
from .transcripts import (
    Composition,
    RandomizerScenario,
    TranscriptLaw,
    center_project,
    hybrid_cf,
    multinomial_law,
    neighboring_experiment,
    neighboring_transcripts,
    one_user_cf,
    projected_experiment,
    realize,
    recover_totals,
)

MAX_ERROR_FRACTION = 0.1
EXACT_TOL = 1e-12


class InsufficientPointsError(ValueError):
    pass


def _estimate(x) -> Estimate:
    if isinstance(x, Estimate):
        return x
    v, e = x
    return Estimate(float(v), float(e))


@dataclass
class RateReport:
    """Least-squares slope of log(error) against log(grid), with the points it used and the ones it skipped."""

    grid: list[float]
    values: list[float]
    error_bars: list[float]
    slope: float
    intercept: float
    max_residual: float
    used: list[int]
    dropped: list[int]
    exact: list[int]
    window: tuple[float, float]
    verdict: bool
    label: str = ""

    def to_json(self) -> dict:
        out = asdict(self)
        out["window"] = list(self.window)
        for key in ("slope", "intercept", "max_residual"):
            if not math.isfinite(out[key]):
                out[key] = None
        out["window"] = [w if math.isfinite(w) else None for w in self.window]
        return out


def rate_fit(
    grid: Sequence[float],
    errors: Sequence,
    window: tuple[float, float] = (-math.inf, math.inf),
    label: str = "",
    exact_tol: float | None = None,
) -> RateReport:
    """OLS fit of log value on log grid.

    Points whose error bar is at least 10% of the value are excluded.  With
    ``exact_tol`` set, points with value below error bar + ``exact_tol`` count as
    exact matches: they are listed, not fitted, and do not fail the verdict.
    """
    grid = [float(g) for g in grid]
    est = [_estimate(e) for e in errors]
    if len(grid) != len(est):
        raise ValueError("grid and errors differ in length")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly increasing")
    used, dropped, exact = [], [], []
    for i, (v, e) in enumerate(est):
        if exact_tol is not None and v <= e + exact_tol:
            exact.append(i)
        elif v > 0 and e <= MAX_ERROR_FRACTION * v:
            used.append(i)
        else:
            dropped.append(i)
    values = [e.value for e in est]
    bars = [e.error for e in est]
    if len(used) < 3:
        if exact and not dropped and not used:
            return RateReport(grid, values, bars, math.nan, math.nan, math.nan, used, dropped, exact, window, True, label)
        raise InsufficientPointsError(
            f"{label or 'rate fit'}: only {len(used)} usable points (dropped {dropped}, exact {exact})"
        )
    x = np.log([grid[i] for i in used])
    y = np.log([values[i] for i in used])
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.abs(y - (slope * x + intercept)).max())
    verdict = bool(window[0] <= slope <= window[1]) and not dropped
    return RateReport(grid, values, bars, float(slope), float(intercept), resid, used, dropped, exact, window, verdict, label)


@dataclass
class LabResult:
    """Rows for a flat table, fitted rate reports, and named boolean checks."""

    name: str
    rows: list[dict]
    reports: dict[str, RateReport] = field(default_factory=dict)
    checks: dict[str, bool] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values()) and all(r.verdict for r in self.reports.values())

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "meta": self.meta,
            "rows": self.rows,
            "reports": {k: r.to_json() for k, r in self.reports.items()},
            "checks": self.checks,
            "passed": self.passed,
        }


def _map(fn: Callable, items: Iterable, jobs: int = 1) -> list:
    """Ordered map, optionally across worker processes."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------- catalog


@dataclass(frozen=True, eq=False)
class ScenarioCatalogEntry:
    name: str
    scenario: RandomizerScenario
    expected: Mapping[str, object]


def _scenario(name, symbols, D0, D1, p0, p1, alpha0, alpha1, pi, composition=Composition(), correction=None):
    ds = DominantStructure(tuple(D0), tuple(D1), p0, p1, alpha0, alpha1)
    return RandomizerScenario(AlphabetSpec(tuple(symbols)), ds, pi, composition, correction or {}, name)


def sharpness_scenario(p: float = 0.3, q: float = 0.8, lam: float = 1.0, pi: float = 0.5, kappa: float = 0.0):
    """Two-dominant disjoint array whose only rare event is a one-user landing in D0 with split (q, 1-q).

    ``kappa`` tilts the zero-users' split to (p + kappa/n, 1 - p - kappa/n).
    """
    correction = {0: {"a": kappa, "b": -kappa}} if kappa else {}
    return _scenario(
        f"sharpness(p={p:g},q={q:g},lam={lam:g})",
        "abcd", "ab", "cd",
        {"a": p, "b": 1 - p}, {"c": p, "d": 1 - p},
        {}, {"a": lam * q, "b": lam * (1 - q)},
        pi, correction=correction,
    )


def catalog() -> list[ScenarioCatalogEntry]:
    entries = [
        ScenarioCatalogEntry(
            "single_dominant",
            _scenario("single_dominant", ("y0", "y1", "y2"), ["y0"], ["y1"], {"y0": 1.0}, {"y1": 1.0},
                      {"y1": 1.0, "y2": 0.5}, {"y0": 0.7}, 0.5),
            {"projected_rate_slope_max": -0.9, "n_grid": [8, 16, 32, 64, 128, 256, 512]},
        ),
        ScenarioCatalogEntry(
            "two_dominant_disjoint",
            _scenario("two_dominant_disjoint", "abcde", "ab", "cd", {"a": 0.3, "b": 0.7}, {"c": 0.6, "d": 0.4},
                      {"c": 0.4, "e": 0.5}, {"a": 0.3, "e": 0.6}, 0.5),
            {"projected_rate_slope_max": -0.9, "privacy_gap_at_256_eps1_max": 0.05},
        ),
        ScenarioCatalogEntry(
            "two_dominant_overlap",
            _scenario("two_dominant_overlap", "abcd", "ab", "bc", {"a": 0.4, "b": 0.6}, {"b": 0.5, "c": 0.5},
                      {"c": 0.5, "d": 0.3}, {"a": 0.4}, 0.5),
            {"delta_shift_zero": True, "tv_slope_max": -0.4, "n_grid": [16, 32, 64, 128, 256, 512]},
        ),
        ScenarioCatalogEntry(
            "mixed_size",
            _scenario("mixed_size", "abcd", "a", "bc", {"a": 1.0}, {"b": 0.4, "c": 0.6},
                      {"b": 0.5, "d": 0.4}, {"a": 0.6, "d": 0.3}, 0.5),
            {"projected_rate_slope_max": -0.9},
        ),
        ScenarioCatalogEntry(
            "obstruction",
            _scenario("obstruction", "abc", "ab", "bc", {"a": 0.5, "b": 0.5}, {"b": 0.5, "c": 0.5},
                      {}, {}, 0.0, composition=Composition("fixed", 0)),
            {"delta_min": 0.5, "n_grid": [1, 2, 5, 10, 20], "eps_grid": [0, 0.5, 1, 2]},
        ),
        ScenarioCatalogEntry(
            "sharpness",
            sharpness_scenario(),
            {"sqrt_n_tv_ratio_max": 2.0, "tv_slope_window": [-0.65, -0.35], "n_grid": [32, 64, 128, 256]},
        ),
    ]
    names = [e.name for e in entries]
    assert len(set(names)) == len(names)
    return entries


def catalog_entry(name: str) -> ScenarioCatalogEntry:
    for e in catalog():
        if e.name == name:
            return e
    raise KeyError(f"no catalog scenario named {name!r}; known: {[e.name for e in catalog()]}")


# ---------------------------------------------------------------- geometry


def geometry_check(scenario: RandomizerScenario) -> LabResult:
    res = geometry_residuals(scenario.geometry)
    checks = {
        "complement": res["complement"] <= 1e-12,
        "idempotent": res["idempotent"] <= 1e-10,
        "symmetric": res["symmetric"] <= 1e-10,
        "collapse": res["collapse"] <= 1e-10,
        "delta_formulas": res["delta_formulas"] <= 1e-10,
    }
    return LabResult("geometry", [{"check": k, "residual": v, "residual_err": 0.0} for k, v in res.items()],
                     checks=checks, meta={"scenario": scenario.name, "geometry": scenario.geometry.to_json()})


# ---------------------------------------------------------------- projected rate


def _projected_point(args):
    scenario, n, prune, tol = args
    g = scenario.geometry
    t0, t1 = neighboring_transcripts(scenario, n, prune)
    fin = projected_experiment(t0, t1, g)
    lim = projected_limit_experiment(g, tol)
    return tv_distance(fin.null_law, lim.null_law), tv_distance(fin.alt_law, lim.alt_law)


def projected_rate_experiment(
    scenario: RandomizerScenario,
    n_grid: Sequence[int],
    prune: float = DEFAULT_PRUNE,
    tol: float = 1e-12,
    slope_max: float = -0.9,
    jobs: int = 1,
) -> LabResult:
    """TV(P_n^J, P^J) + TV(Q_n^J, Q^J) over ``n_grid`` and its log-log slope."""
    scenario.validate_grid(n_grid)
    pts = _map(_projected_point, [(scenario, n, prune, tol) for n in n_grid], jobs)
    rows, totals = [], []
    for n, (a, b) in zip(n_grid, pts):
        tot = Estimate(a.value + b.value, a.error + b.error + 2 * tol)
        totals.append(tot)
        rows.append({"n": n, "tv_null": a.value, "tv_null_err": a.error, "tv_alt": b.value,
                     "tv_alt_err": b.error, "tv_sum": tot.value, "tv_sum_err": tot.error})
    checks = {}
    reports = {}
    if all(t.value <= t.error + EXACT_TOL for t in totals):
        checks["all_exact"] = True
    else:
        reports["tv_sum"] = rate_fit(n_grid, totals, (-math.inf, slope_max), "projected TV", exact_tol=EXACT_TOL)
    return LabResult("projected-rate", rows, reports, checks,
                     {"scenario": scenario.name, "prune": prune, "tol": tol})


# ---------------------------------------------------------------- full privacy


def _privacy_point(args):
    scenario, n, eps_grid, prune = args
    exp = neighboring_experiment(scenario, n, prune)
    return [privacy_delta(exp, e) for e in eps_grid], tv_distance(exp.null_law, exp.alt_law)


def full_privacy_convergence(
    scenario: RandomizerScenario,
    n_grid: Sequence[int],
    eps_grid: Sequence[float],
    prune: float = DEFAULT_PRUNE,
    tol: float = 1e-12,
    slope_max: float = -0.4,
    jobs: int = 1,
) -> LabResult:
    """Exact delta_n(eps) on raw transcripts against the limit curve from the projected limit."""
    scenario.validate_grid(n_grid)
    lim = projected_limit_experiment(scenario.geometry, tol)
    limit = [privacy_delta(lim, e) for e in eps_grid]
    pts = _map(_privacy_point, [(scenario, n, tuple(eps_grid), prune) for n in n_grid], jobs)
    rows = []
    gaps: dict[float, list[Estimate]] = {e: [] for e in eps_grid}
    for n, (deltas, tv) in zip(n_grid, pts):
        for e, d, dl in zip(eps_grid, deltas, limit):
            gap = Estimate(abs(d.value - dl.value), d.error + dl.error)
            gaps[e].append(gap)
            rows.append({"n": n, "epsilon": e, "delta_n": d.value, "delta_n_err": d.error,
                         "delta_limit": dl.value, "delta_limit_err": dl.error,
                         "gap": gap.value, "gap_err": gap.error, "tv_n": tv.value, "tv_n_err": tv.error})
    reports = {}
    for e in eps_grid:
        try:
            reports[f"gap_eps={e:g}"] = rate_fit(n_grid, gaps[e], (-math.inf, slope_max), f"gap at eps={e:g}",
                                                 exact_tol=EXACT_TOL)
        except InsufficientPointsError:
            pass
    checks = {"delta_below_tv": all(r["delta_n"] <= r["tv_n"] + r["tv_n_err"] + r["delta_n_err"] + 1e-12
                                    for r in rows)}
    return LabResult("full-privacy", rows, reports, checks, {"scenario": scenario.name, "prune": prune})


def obstruction_experiment(n_grid: Sequence[int], eps_grid: Sequence[float], prune: float = DEFAULT_PRUNE) -> LabResult:
    """Exact privacy curves of the overlapping obstruction array; they never drop below one half."""
    scenario = catalog_entry("obstruction").scenario
    rows = []
    for n in n_grid:
        exp = neighboring_experiment(scenario, n, prune)
        for e in eps_grid:
            d = privacy_delta(exp, e)
            rows.append({"n": n, "epsilon": e, "delta": d.value, "delta_err": d.error})
    checks = {"delta_at_least_half": all(r["delta"] >= 0.5 - 1e-12 for r in rows)}
    return LabResult("obstruction", rows, {}, checks, {"scenario": scenario.name})


def tv_rate_experiment(
    scenario: RandomizerScenario,
    n_grid: Sequence[int],
    prune: float = DEFAULT_PRUNE,
    slope_max: float = -0.4,
    jobs: int = 1,
) -> LabResult:
    """TV(P_n, Q_n) of the raw neighboring experiment over ``n_grid``."""
    pts = _map(_privacy_point, [(scenario, n, (0.0,), prune) for n in n_grid], jobs)
    tvs = [tv for _, tv in pts]
    rows = [{"n": n, "tv": t.value, "tv_err": t.error} for n, t in zip(n_grid, tvs)]
    report = rate_fit(n_grid, tvs, (-math.inf, slope_max), "TV(P_n, Q_n)")
    return LabResult("tv-rate", rows, {"tv": report}, {}, {"scenario": scenario.name})


# ---------------------------------------------------------------- auxiliary experiment


def _auxiliary_law(t: TranscriptLaw, scenario: RandomizerScenario, center_k: int, prune: float) -> DiscreteDistribution:
    g = scenario.geometry
    r = realize(scenario, t.n)
    idx = scenario.alphabet.index
    dom = [np.array([idx[y] for y in scenario.ds.dominant(b)]) for b in (0, 1)]
    theta = [r.W(b)[dom[b]] / r.W(b)[dom[b]].sum() for b in (0, 1)]
    outside = np.array([idx[y] for y in g.outside_symbols], dtype=int)
    n_comp = len(g.components)

    proj = center_project(t, g, "jump_only", center_k=center_k)
    keys_out, mass_out = [], []
    deficit = proj.deficit
    for fiber, mass in zip(proj.keys, proj.masses):
        T0, T1 = recover_totals(fiber, g)
        X0 = multinomial_law(T0, theta[0], prune)
        X1 = multinomial_law(T1, theta[1], prune)
        m = mass * np.outer(X0.masses, X1.masses).ravel()
        keep = m > prune
        deficit += mass * (1.0 - X0.total_mass * X1.total_mass) + float(m[~keep].sum())
        h = np.zeros((len(X0) * len(X1), scenario.alphabet.size), dtype=np.int64)
        h[:, dom[0]] = np.repeat(X0.keys, len(X1), axis=0)
        h[:, dom[1]] = np.tile(X1.keys, (len(X0), 1))
        if len(outside):
            h[:, outside] = fiber[n_comp:]
        keys_out.append(h[keep])
        mass_out.append(m[keep])
    return DiscreteDistribution.from_arrays(np.concatenate(keys_out), np.concatenate(mass_out),
                                            deficit, space="histogram")


def auxiliary_experiment(scenario: RandomizerScenario, n: int, prune: float = DEFAULT_PRUNE,
                         transcripts: tuple[TranscriptLaw, TranscriptLaw] | None = None) -> BinaryExperiment:
    """(P~_n, Q~_n): projected law times the native multinomial kernel given the recovered totals.

    Atoms are keyed by the full histogram.  Given the projected atom, the map
    from histogram to hybrid statistic is a bijection, so this is the hybrid
    auxiliary experiment up to relabelling.
    """
    if not scenario.geometry.disjoint:
        raise ValueError("the auxiliary experiment needs disjoint dominant sets")
    t0, t1 = transcripts or neighboring_transcripts(scenario, n, prune)
    return BinaryExperiment(_auxiliary_law(t0, scenario, t0.k, prune), _auxiliary_law(t1, scenario, t0.k, prune))


def _auxiliary_point(args):
    scenario, n, prune = args
    t0, t1 = neighboring_transcripts(scenario, n, prune)
    aux = auxiliary_experiment(scenario, n, prune, (t0, t1))
    return tv_distance(t0.law, aux.null_law), tv_distance(t1.law, aux.alt_law)


def auxiliary_rate_experiment(
    scenario: RandomizerScenario,
    n_grid: Sequence[int],
    prune: float = DEFAULT_PRUNE,
    window: tuple[float, float] = (-0.65, -0.35),
    ratio_max: float | None = 2.0,
    jobs: int = 1,
) -> LabResult:
    """TV(P_n, P~_n) over ``n_grid``: slope and spread of sqrt(n) TV."""
    scenario.validate_grid(n_grid)
    pts = _map(_auxiliary_point, [(scenario, n, prune) for n in n_grid], jobs)
    rows = []
    for n, (a, b) in zip(n_grid, pts):
        rows.append({"n": n, "tv_null": a.value, "tv_null_err": a.error, "tv_alt": b.value, "tv_alt_err": b.error,
                     "sqrt_n_tv_null": math.sqrt(n) * a.value, "sqrt_n_tv_null_err": math.sqrt(n) * a.error})
    report = rate_fit(n_grid, [a for a, _ in pts], window, "TV(P_n, P~_n)", exact_tol=EXACT_TOL)
    checks = {}
    if ratio_max is not None:
        scaled = [r["sqrt_n_tv_null"] for r in rows]
        checks["sqrt_n_window_positive"] = min(scaled) > 0
        checks["sqrt_n_ratio"] = min(scaled) > 0 and max(scaled) / min(scaled) <= ratio_max
    return LabResult("sharpness", rows, {"tv_null": report}, checks, {"scenario": scenario.name, "prune": prune})


# ---------------------------------------------------------------- binomial plus Bernoulli


def _binomial_bernoulli_tv(m: int, p: float, q: float) -> tuple[Estimate, float]:
    s = stats.binom.pmf(np.arange(m + 1), m, p)
    keys = np.arange(m + 2)[:, None]
    X = DiscreteDistribution.from_arrays(keys, np.convolve(s, [1 - q, q]), space="integers")
    Y = DiscreteDistribution.from_arrays(keys, np.convolve(s, [1 - p, p]), space="integers")
    return tv_distance(X, Y), abs(q - p) * float(s.max())


def binomial_bernoulli_check(m_grid: Sequence[int], p: float, q: float) -> LabResult:
    """Enumerated TV(S + Ber(q), S + Ber(p)) against |q - p| max pmf and its normal approximation."""
    if not 0 < p < 1 or not 0 <= q <= 1:
        raise ValueError("need p in (0, 1) and q in [0, 1]")
    rows = []
    gaps = []
    for m in m_grid:
        tv, formula = _binomial_bernoulli_tv(int(m), p, q)
        asym = abs(q - p) / math.sqrt(2 * math.pi * m * p * (1 - p))
        gap = Estimate(abs(tv.value - asym), tv.error + 1e-15)
        gaps.append(gap)
        rows.append({"m": m, "tv_enum": tv.value, "tv_enum_err": tv.error, "tv_formula": formula,
                     "tv_formula_err": 1e-15, "abs_diff": abs(tv.value - formula), "abs_diff_err": tv.error,
                     "sqrt_m_tv": math.sqrt(m) * tv.value, "sqrt_m_tv_err": math.sqrt(m) * tv.error,
                     "asymptote_gap": gap.value, "asymptote_gap_err": gap.error})
    checks = {"exact_formula": all(r["abs_diff"] <= 1e-12 for r in rows)}
    reports = {}
    if p != q and len(m_grid) >= 3:
        try:
            reports["asymptote_gap"] = rate_fit(m_grid, gaps, (-math.inf, -0.9), "asymptotic gap")
        except InsufficientPointsError:
            pass
    return LabResult("binom-ber", rows, reports, checks, {"p": p, "q": q})


# ---------------------------------------------------------------- boundary


def boundary_be_experiment(
    c_grid: Sequence[float],
    eps_list: Sequence[float] = (1.0,),
    skellam_pis: Sequence[float] = (0.3, 0.5),
    tol: float = 1e-10,
    slope_min: float = 0.9,
) -> LabResult:
    """Jitter/rounding TVs and lattice-vs-Gaussian privacy gaps along a shrinking c grid."""
    c_sorted = sorted(float(c) for c in c_grid)
    rows = []
    jit, rnd = [], []
    gaps: dict[str, list[Estimate]] = {}
    checks = {"kernel_tv_below_2c": True, "gap_below_bound": True}
    for c in c_sorted:
        j = jitter_tv_to_gaussian(c, tol)
        r = rounding_tv_to_poisson(c, tol)
        jit.append(j)
        rnd.append(r)
        checks["kernel_tv_below_2c"] &= j.value <= 2 * c and r.value <= 2 * c
        for e in eps_list:
            for kind, pi in [("poisson", 0.5), *(("skellam", s) for s in skellam_pis)]:
                row = delta_comparison(c, e, kind, pi, tol)
                key = f"{kind}(pi={pi:g}),eps={e:g}" if kind == "skellam" else f"poisson,eps={e:g}"
                gaps.setdefault(key, []).append(row.gap)
                checks["gap_below_bound"] &= row.gap.value <= row.bound.value + row.bound.error + row.gap.error
                rows.append({"c": c, "epsilon": e, "kind": kind, "pi": pi if kind == "skellam" else None,
                             "jitter_tv": j.value, "jitter_tv_err": j.error,
                             "rounding_tv": r.value, "rounding_tv_err": r.error,
                             "delta_poi": row.delta_poi.value, "delta_poi_err": row.delta_poi.error,
                             "delta_gauss": row.delta_gauss.value, "delta_gauss_err": row.delta_gauss.error,
                             "gap": row.gap.value, "gap_err": row.gap.error,
                             "bound": row.bound.value, "bound_err": row.bound.error})
    window = (slope_min, math.inf)
    reports = {"jitter": rate_fit(c_sorted, jit, window, "jitter TV"),
               "rounding": rate_fit(c_sorted, rnd, window, "rounding TV")}
    for key, g in gaps.items():
        reports[f"gap[{key}]"] = rate_fit(c_sorted, g, window, f"delta gap {key}")
    return LabResult("boundary-be", rows, reports, checks, {"tol": tol})


# ---------------------------------------------------------------- characteristic functions


def cf_leading_terms(scenario: RandomizerScenario, b: int, u, v, n: int) -> complex:
    """-<u, Gamma_b u>/(2n) + n^-1 sum_y alpha_b(y)(exp(i<v, j_{b,y}>) - 1)."""
    g = scenario.geometry
    u = g.proj_G @ np.asarray(u, dtype=float)
    v = g.proj_J @ np.asarray(v, dtype=float)
    out = -0.5 * float(u @ g.gamma(b) @ u) / n
    for j in g.jumps:
        if j.source == b:
            a = scenario.ds.alpha(b).get(j.symbol, 0.0)
            out += a * (cmath.exp(1j * float(v @ j.vector)) - 1) / n
    return out


def cf_expansion_residuals(scenario: RandomizerScenario, b: int, u, v, n_grid: Sequence[int]) -> list[float]:
    """n |log phi_{b,n}(u, v) - leading terms| for each n."""
    out = []
    for n in n_grid:
        phi = one_user_cf(realize(scenario, n), scenario.geometry, b, u, v, n)
        out.append(n * abs(cmath.log(phi) - cf_leading_terms(scenario, b, u, v, n)))
    return out


def hybrid_cf_gaps(scenario: RandomizerScenario, n_grid: Sequence[int], uv_grid: Sequence[tuple]) -> list[float]:
    """Max over the (u, v) grid of |cf of the hybrid statistic - limit cf|, null and alternative."""
    g = scenario.geometry
    out = []
    for n in n_grid:
        worst = 0.0
        for u, v in uv_grid:
            for alt in (False, True):
                worst = max(worst, abs(hybrid_cf(scenario, n, u, v, alt) - hybrid_limit_cf(g, u, v, alt)))
        out.append(worst)
    return out
