"""Shared strategies and small brute-force oracles for the test suite."""
from __future__ import annotations

from itertools import chain, combinations

import numpy as np
from hypothesis import strategies as st

from shufflelab.distributions import BinaryExperiment, DiscreteDistribution


def random_law(rng: np.random.Generator, support: int = 6, atoms: int | None = None, dim: int = 1,
               space: str = "lattice") -> DiscreteDistribution:
    atoms = atoms or int(rng.integers(1, support + 1))
    keys = rng.choice(support, size=atoms, replace=False)
    if dim > 1:
        keys = np.stack([keys] + [rng.integers(0, 2, atoms) for _ in range(dim - 1)], axis=1)
    masses = rng.dirichlet(np.ones(atoms))
    return DiscreteDistribution.from_arrays(keys, masses, space=space)


def random_experiment(rng: np.random.Generator, support: int = 6) -> BinaryExperiment:
    return BinaryExperiment(random_law(rng, support), random_law(rng, support))


@st.composite
def laws(draw, support: int = 6):
    n = draw(st.integers(1, support))
    keys = draw(st.lists(st.integers(0, support - 1), min_size=n, max_size=n, unique=True))
    w = draw(st.lists(st.floats(0.01, 1.0), min_size=n, max_size=n))
    m = np.asarray(w) / np.sum(w)
    return DiscreteDistribution.from_arrays(np.asarray(keys), m)


def brute_force_delta(exp: BinaryExperiment, eps: float) -> float:
    """sup over all events A of Q(A) - e^eps P(A), by enumerating subsets of the joint support."""
    p, q = exp.null_law.atoms, exp.alt_law.atoms
    support = sorted(set(p) | set(q))
    best = 0.0
    for A in chain.from_iterable(combinations(support, r) for r in range(len(support) + 1)):
        best = max(best, sum(q.get(k, 0.0) for k in A) - np.exp(eps) * sum(p.get(k, 0.0) for k in A))
    return best
