import math

import numpy as np
import pytest

from shufflelab.distributions import privacy_delta, tv_distance
from shufflelab.geometry import AlphabetSpec, DominantStructure
from shufflelab.lab import (
    InsufficientPointsError,
    auxiliary_experiment,
    auxiliary_rate_experiment,
    binomial_bernoulli_check,
    boundary_be_experiment,
    catalog,
    catalog_entry,
    full_privacy_convergence,
    geometry_check,
    obstruction_experiment,
    projected_rate_experiment,
    rate_fit,
    sharpness_scenario,
    tv_rate_experiment,
)
from shufflelab.limits import projected_limit_experiment
from shufflelab.transcripts import (
    RandomizerScenario,
    center_project,
    neighboring_transcripts,
    projected_experiment,
    quotient_law,
    realize,
)

GRID = [8.0, 16.0, 32.0, 64.0]


def test_rate_fit_examples():
    g = np.array(GRID)
    assert rate_fit(g, [(x, 0.0) for x in 1 / g]).slope == pytest.approx(-1, abs=1e-10)
    assert rate_fit(g, [(x, 0.0) for x in g**-0.5]).slope == pytest.approx(-0.5, abs=1e-10)
    assert rate_fit(g, [(0.3, 0.0)] * 4).slope == pytest.approx(0, abs=1e-10)


def test_rate_fit_drops_noisy_points():
    rep = rate_fit(GRID, [(1 / 8, 0), (1 / 16, 0.02), (1 / 32, 0), (1 / 64, 0), ], (-1.1, -0.9))
    assert rep.dropped == [1] and rep.used == [0, 2, 3]
    assert rep.verdict is False  # dropped points are reported as a failure of the run
    with pytest.raises(InsufficientPointsError):
        rate_fit(GRID, [(1, 0), (1, 1), (0, 0), (1, 0)])
    with pytest.raises(ValueError):
        rate_fit([1, 1, 2], [(1, 0)] * 3)


def test_rate_fit_exact_matches():
    rep = rate_fit(GRID, [(1e-17, 1e-16)] * 4, (-math.inf, -0.9), exact_tol=1e-12)
    assert rep.verdict and rep.exact == [0, 1, 2, 3] and math.isnan(rep.slope)


def test_catalog_entries():
    entries = {e.name: e for e in catalog()}
    assert {"single_dominant", "two_dominant_disjoint", "two_dominant_overlap", "mixed_size", "obstruction",
            "sharpness"} <= set(entries)
    ob = entries["obstruction"].scenario
    assert ob.alphabet.symbols == ("a", "b", "c")
    assert set(ob.ds.D0) == {"a", "b"} and set(ob.ds.D1) == {"b", "c"}
    assert ob.ds.p0 == {"a": 0.5, "b": 0.5} and ob.ds.p1 == {"b": 0.5, "c": 0.5}
    assert not ob.ds.alpha0 and not ob.ds.alpha1 and ob.pi_limit == 0
    assert all(ob.k_n(n) == 0 for n in (1, 5, 100))
    mixed = entries["mixed_size"].scenario
    assert len(mixed.ds.D0) == 1 and len(mixed.ds.D1) == 2 and mixed.geometry.disjoint
    sh = entries["sharpness"].scenario
    W1 = realize(sh, 64).W1
    assert W1 == pytest.approx([0.8 / 64, 0.2 / 64, 0.3 * (1 - 1 / 64), 0.7 * (1 - 1 / 64)], abs=1e-16)
    for e in entries.values():
        assert geometry_check(e.scenario).passed


def test_projected_rate_without_rare_mass_is_exact():
    ds = DominantStructure(("a", "b"), ("c", "d"), {"a": 0.3, "b": 0.7}, {"c": 0.6, "d": 0.4}, {}, {})
    s = RandomizerScenario(AlphabetSpec(tuple("abcd")), ds, 0.5)
    res = projected_rate_experiment(s, [8, 16, 32])
    assert all(r["tv_sum"] <= 1e-15 for r in res.rows)  # point masses up to float rounding
    assert res.passed


def test_overlap_alt_side_matches_direct_recomputation():
    s = catalog_entry("two_dominant_overlap").scenario
    g = s.geometry
    lim = projected_limit_experiment(g, 1e-12)
    assert lim.null_law.atoms == lim.alt_law.atoms
    res = projected_rate_experiment(s, [16, 32, 64], tol=1e-12)
    for row in res.rows:
        t0, t1 = neighboring_transcripts(s, row["n"])
        q = quotient_law(center_project(t1, g, "jump_only", center_k=t0.k), g)
        direct = tv_distance(q, lim.null_law).value
        assert row["tv_alt"] == pytest.approx(direct, abs=1e-14)


def test_full_privacy_overlap_interior():
    s = catalog_entry("two_dominant_overlap").scenario
    res = full_privacy_convergence(s, [16, 32, 64, 128], [0.0, 1.0])
    assert res.checks["delta_below_tv"]
    d = [r["delta_n"] for r in res.rows if r["epsilon"] == 1.0]
    assert all(x > y for x, y in zip(d, d[1:]))


def test_full_privacy_two_dominant_gap_at_256():
    s = catalog_entry("two_dominant_disjoint").scenario
    res = full_privacy_convergence(s, [256], [1.0])
    assert res.rows[0]["gap"] < 0.05


def test_full_privacy_obstruction_gap_persists():
    s = catalog_entry("obstruction").scenario
    res = full_privacy_convergence(s, [1, 2, 5, 10, 20], [0, 0.5, 1, 2])
    assert all(r["delta_n"] >= 0.5 - 1e-12 for r in res.rows)
    assert all(r["gap"] >= 0.5 - 1e-12 for r in res.rows)
    assert obstruction_experiment([1, 2, 5], [0, 1]).passed


def test_overlap_tv_upper_rate():
    res = tv_rate_experiment(catalog_entry("two_dominant_overlap").scenario, [16, 32, 64, 128, 256, 512])
    assert res.reports["tv"].slope <= -0.4


def test_auxiliary_without_rare_mass_is_exact():
    ds = DominantStructure(("a", "b"), ("c", "d"), {"a": 0.3, "b": 0.7}, {"c": 0.6, "d": 0.4}, {}, {})
    s = RandomizerScenario(AlphabetSpec(tuple("abcd")), ds, 0.5)
    t0, t1 = neighboring_transcripts(s, 12)
    aux = auxiliary_experiment(s, 12)
    assert tv_distance(t0.law, aux.null_law).value <= 1e-15
    assert tv_distance(t1.law, aux.alt_law).value <= 1e-15


def test_auxiliary_rejects_overlap():
    with pytest.raises(ValueError):
        auxiliary_experiment(catalog_entry("two_dominant_overlap").scenario, 8)


@pytest.mark.parametrize("name,n", [("two_dominant_disjoint", 24), ("sharpness", 40), ("mixed_size", 30)])
def test_auxiliary_marginals_and_privacy(name, n):
    s = catalog_entry(name).scenario
    g = s.geometry
    t0, t1 = neighboring_transcripts(s, n)
    aux = auxiliary_experiment(s, n, transcripts=(t0, t1))
    F = g.fiber_matrix()
    for true, surrogate in ((t0, aux.null_law), (t1, aux.alt_law)):
        a = {}
        for key, m in zip(true.law.keys @ F, true.law.masses):
            a[tuple(key)] = a.get(tuple(key), 0.0) + m
        b = {}
        for key, m in zip(surrogate.keys @ F, surrogate.masses):
            b[tuple(key)] = b.get(tuple(key), 0.0) + m
        slack = 1e-12 + true.law.deficit + surrogate.deficit
        for k in set(a) | set(b):
            assert b.get(k, 0.0) == pytest.approx(a.get(k, 0.0), abs=slack)
    proj = projected_experiment(t0, t1, g)
    for eps in (0.0, 0.5, 1.0, 2.0):
        da, dp = privacy_delta(aux, eps), privacy_delta(proj, eps)
        assert da.value == pytest.approx(dp.value, abs=1e-9 + da.error + dp.error)


def test_sharpness_window():
    res = auxiliary_rate_experiment(sharpness_scenario(), [32, 64, 128], prune=1e-14)
    scaled = [r["sqrt_n_tv_null"] for r in res.rows]
    assert min(scaled) > 0 and max(scaled) / min(scaled) <= 2


def test_compatibility_with_tilted_split():
    # q = p but zero-users split as p + kappa/n: cross and native laws differ by O(1/n)
    res = auxiliary_rate_experiment(sharpness_scenario(0.3, 0.3, 1.0, kappa=0.5), [32, 64, 128, 256],
                                    prune=1e-14, window=(-math.inf, -0.9), ratio_max=None)
    assert res.reports["tv_null"].slope <= -0.9
    assert res.passed


def test_binomial_bernoulli_examples():
    assert binomial_bernoulli_check([5, 50], 0.4, 0.4).rows[0]["tv_enum"] == 0
    two = binomial_bernoulli_check([2], 0.5, 1.0).rows[0]
    assert two["tv_enum"] == pytest.approx(0.25, abs=1e-15)
    assert two["tv_formula"] == pytest.approx(0.25, abs=1e-15)
    big = binomial_bernoulli_check([10_000], 0.3, 0.8).rows[0]
    asym = 0.5 / math.sqrt(2 * math.pi * 0.21)
    assert big["sqrt_m_tv"] == pytest.approx(asym, rel=0.01)
    with pytest.raises(ValueError):
        binomial_bernoulli_check([3], 0.0, 0.5)


def test_boundary_examples():
    res = boundary_be_experiment([0.1, 0.2, 0.4], [1.0], skellam_pis=(0.5,))
    jit = {r["c"]: r["jitter_tv"] for r in res.rows}
    assert jit[0.1] < jit[0.4]
    assert res.reports["jitter"].slope >= 0.9
    g = np.array([0.1, 0.2, 0.4])
    assert rate_fit(g, [(x, 0) for x in 3 * g]).slope == pytest.approx(1, abs=1e-12)
    assert res.checks["kernel_tv_below_2c"] and res.checks["gap_below_bound"]


def test_reports_are_reproducible():
    s = catalog_entry("single_dominant").scenario
    a = projected_rate_experiment(s, [8, 16, 32, 64]).to_json()
    b = projected_rate_experiment(s, [8, 16, 32, 64]).to_json()
    assert a == b


def test_parallel_grid_matches_serial():
    s = catalog_entry("mixed_size").scenario
    a = projected_rate_experiment(s, [8, 16, 32, 64], jobs=1).to_json()
    b = projected_rate_experiment(s, [8, 16, 32, 64], jobs=2).to_json()
    assert a == b
