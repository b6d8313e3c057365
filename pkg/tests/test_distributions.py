from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import brute_force_delta, laws, random_law
from shufflelab.distributions import (
    BinaryExperiment,
    DiscreteDistribution,
    KeySpaceError,
    ResourceLimitError,
    convolve,
    lecam_upper_bound,
    privacy_curve,
    privacy_delta,
    privacy_delta_raw,
    product,
    pushforward,
    tv_distance,
)


def law(atoms, deficit=0.0, space="lattice"):
    keys = np.array([k if isinstance(k, tuple) else (k,) for k in atoms])
    return DiscreteDistribution.from_arrays(keys, np.array(list(atoms.values()), dtype=float), deficit, space=space)


def test_invariants_are_enforced():
    with pytest.raises(ValueError):
        DiscreteDistribution(np.array([[0], [1]]), np.array([0.5, 0.4]))
    with pytest.raises(ValueError):
        DiscreteDistribution(np.array([[0]]), np.array([0.0]), 1.0)
    with pytest.raises(ValueError):
        DiscreteDistribution(np.array([[0]]), np.array([1.0]), -0.1)
    merged = law({0: 0.25, 1: 0.75})
    assert merged.keys.flags.writeable is False


def test_from_arrays_merges_and_prunes():
    d = DiscreteDistribution.from_arrays(np.array([[1], [0], [1], [2]]), np.array([0.3, 0.5, 0.2 - 1e-16, 1e-16]),
                                         prune=1e-15)
    assert d.atoms == {(0,): 0.5, (1,): pytest.approx(0.5)}
    assert d.deficit == pytest.approx(1e-16)


def test_tv_examples():
    p = law({0: 0.2, 3: 0.8})
    assert tv_distance(p, p).value == 0
    assert tv_distance(law({0: 1.0}), law({1: 1.0})).value == 1


def test_tv_binomial_plus_bernoulli_against_fractions():
    # Bin(2,1/2)+Ber(1) against Bin(2,1/2)+Ber(1/2), enumerated in exact arithmetic
    half = Fraction(1, 2)
    s = {0: Fraction(1, 4), 1: Fraction(1, 2), 2: Fraction(1, 4)}
    x = {k + 1: v for k, v in s.items()}
    y = {}
    for k, v in s.items():
        for b, w in ((0, half), (1, half)):
            y[k + b] = y.get(k + b, 0) + v * w
    oracle = sum(abs(x.get(k, 0) - y.get(k, 0)) for k in set(x) | set(y)) / 2
    assert oracle == Fraction(1, 4)
    got = tv_distance(law({k: float(v) for k, v in x.items()}), law({k: float(v) for k, v in y.items()}))
    assert got.value == pytest.approx(float(oracle), abs=1e-15)


def test_tv_error_bar_and_mismatch():
    p = law({0: 0.5, 1: 0.5 - 1e-9}, deficit=1e-9)
    q = law({0: 1.0})
    assert tv_distance(p, q).error == pytest.approx(0.5e-9)
    with pytest.raises(KeySpaceError):
        tv_distance(law({0: 1.0}), law({(0, 1): 1.0}))
    with pytest.raises(KeySpaceError):
        tv_distance(law({0: 1.0}), law({0: 1.0}, space="other"))


def test_privacy_delta_examples():
    p = law({0: 0.3, 1: 0.7})
    for eps in (0, 0.5, 3):
        assert privacy_delta(BinaryExperiment(p, p), eps).value == 0
    obstruction = BinaryExperiment(law({0: 0.5, 1: 0.5}), law({1: 0.5, 2: 0.5}))
    for eps in (0, 0.5, 1, 2, 10):
        assert privacy_delta(obstruction, eps).value == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(ValueError):
        privacy_delta(obstruction, -0.1)


def test_privacy_delta_error_bar():
    exp = BinaryExperiment(law({0: 1 - 1e-8}, deficit=1e-8), law({1: 1 - 2e-8}, deficit=2e-8))
    assert privacy_delta(exp, 1.0).error == pytest.approx(2e-8 + np.e * 1e-8)


@settings(max_examples=150, deadline=None)
@given(laws(), laws(), st.floats(0, 3))
def test_privacy_delta_matches_event_supremum(p, q, eps):
    exp = BinaryExperiment(p, q)
    assert privacy_delta(exp, eps).value == pytest.approx(brute_force_delta(exp, eps), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(laws(), laws())
def test_delta_at_zero_is_tv(p, q):
    exp = BinaryExperiment(p, q)
    assert privacy_delta(exp, 0).value == pytest.approx(tv_distance(p, q).value, abs=1e-15)


def test_privacy_curve_examples():
    p, q = law({0: 0.4, 1: 0.6}), law({0: 0.7, 1: 0.3})
    curve = privacy_curve(BinaryExperiment(p, q), [0.0])
    assert curve.deltas[0] == pytest.approx(tv_distance(p, q).value)
    assert np.all(privacy_curve(BinaryExperiment(p, p), [0, 1, 2]).deltas == 0)
    obstruction = BinaryExperiment(law({0: 0.5, 1: 0.5}), law({1: 0.5, 2: 0.5}))
    assert privacy_curve(obstruction, [0, 0.5, 1]).deltas == pytest.approx([0.5] * 3)
    with pytest.raises(ValueError):
        privacy_curve(obstruction, [])
    with pytest.raises(ValueError):
        privacy_curve(obstruction, [1, 0])


@settings(max_examples=100, deadline=None)
@given(laws(), laws())
def test_delta_nonincreasing_and_convex_in_exp_eps(p, q):
    exp = BinaryExperiment(p, q)
    t = np.linspace(1, 6, 11)  # grid in e^eps
    d = np.array([privacy_delta_raw(exp, np.log(x)) for x in t])
    assert np.all(np.diff(d) <= 1e-12)
    assert np.all(d[:-2] - 2 * d[1:-1] + d[2:] >= -1e-12)


def test_pushforward_examples():
    p = law({0: 0.3, 1: 0.7}, space="s")
    assert pushforward(p, lambda k: k).atoms == p.atoms
    const = pushforward(law({0: 0.3, 1: 0.7 - 1e-10}, deficit=1e-10), lambda k: (5,))
    assert const.atoms == {(5,): pytest.approx(1 - 1e-10)} and const.deficit == pytest.approx(1e-10)
    assert pushforward(p, lambda k: (9,)).atoms == {(9,): pytest.approx(1.0)}


def test_product_examples():
    coin = law({0: 0.5, 1: 0.5})
    pp = product(coin, coin)
    assert pp.atoms == {(a, b): 0.25 for a in (0, 1) for b in (0, 1)}
    pref = product(law({7: 1.0}), coin)
    assert pref.atoms == {(7, 0): 0.5, (7, 1): 0.5}
    a = law({0: 1 - 1e-9}, deficit=1e-9)
    b = law({0: 1 - 2e-9}, deficit=2e-9)
    assert product(a, b).deficit == pytest.approx(1e-9 + 2e-9 - 2e-18)


def brute_convolve(p, q):
    out = {}
    for k1, m1 in p.atoms.items():
        for k2, m2 in q.atoms.items():
            k = tuple(a + b for a, b in zip(k1, k2))
            out[k] = out.get(k, 0.0) + m1 * m2
    return out


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_convolve_matches_double_loop(seed):
    rng = np.random.default_rng(seed)
    p, q = random_law(rng, 8, dim=2), random_law(rng, 8, dim=2)
    got = convolve(p, q, prune=0.0)
    ref = brute_convolve(p, q)
    assert set(got.atoms) == set(ref)
    for k, m in ref.items():
        assert got.atoms[k] == pytest.approx(m, rel=1e-12)


def test_convolve_pruning_is_accounted():
    rng = np.random.default_rng(3)
    p = DiscreteDistribution.from_arrays(np.arange(40), rng.dirichlet(np.full(40, 0.05)))
    q = DiscreteDistribution.from_arrays(np.arange(40), rng.dirichlet(np.full(40, 0.05)))
    c = convolve(p, q, prune=1e-6)
    ref = brute_convolve(p, q)
    # pruning only removes pair products, so every kept atom is bounded by the exact one
    for k, m in c.atoms.items():
        assert m <= ref[k] * (1 + 1e-12)
    assert c.deficit == pytest.approx(sum(ref.values()) - c.total_mass, abs=1e-12)
    assert c.deficit > 0
    with pytest.raises(ResourceLimitError):
        convolve(p, q, prune=0.0, atom_cap=10)


def test_lecam_examples():
    p, q = law({0: 0.5, 1: 0.5}), law({0: 0.2, 1: 0.8})
    e = BinaryExperiment(p, q)
    assert lecam_upper_bound(e, e).value == 0
    assert lecam_upper_bound(e, BinaryExperiment(p, p)).value == pytest.approx(tv_distance(q, p).value)
    with pytest.raises(KeySpaceError):
        lecam_upper_bound(e, BinaryExperiment(law({(0, 0): 1.0}), law({(0, 0): 1.0})))


def test_lecam_on_projected_single_dominant():
    from shufflelab.lab import catalog_entry
    from shufflelab.limits import projected_limit_experiment
    from shufflelab.transcripts import neighboring_transcripts, projected_experiment

    s = catalog_entry("single_dominant").scenario
    t0, t1 = neighboring_transcripts(s, 64)
    fin = projected_experiment(t0, t1, s.geometry)
    lim = projected_limit_experiment(s.geometry)
    a = tv_distance(fin.null_law, lim.null_law).value
    b = tv_distance(fin.alt_law, lim.alt_law).value
    assert lecam_upper_bound(fin, lim).value == max(a, b)


def test_characteristic_function_of_point_mass():
    d = DiscreteDistribution.point_mass((2,))
    assert d.characteristic_function(np.array([0.5])) == pytest.approx(np.exp(1j))
