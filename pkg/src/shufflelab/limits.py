"""Limit experiments: the compound-Poisson jump field, Poisson/Skellam/Gaussian shifts, and the lattice kernels."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special, stats

from .distributions import BinaryExperiment, DiscreteDistribution, Estimate, privacy_delta
from .geometry import GROUPING_TOL, QuotientGeometry

# Truncation for the one-dimensional shift experiments.  It sits far below any
# value compared in the boundary tables so their deep tails stay meaningful.
SHIFT_TAIL = 1e-300
PHI_CLAMP = 40.0


@dataclass(frozen=True, eq=False)
class LevyAtomSet:
    """Finite atomic Levy measure: ``weights[i]`` on jump vector ``vectors[i]``."""

    weights: np.ndarray
    vectors: np.ndarray
    groups: tuple[int, ...] = ()

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        z = np.atleast_2d(np.asarray(self.vectors, dtype=float))
        if w.ndim != 1 or len(w) != len(z):
            raise ValueError("weights and vectors must align")
        if np.any(w <= 0):
            raise ValueError("Levy atom weights must be positive")
        for i in range(len(z)):
            for j in range(i):
                if np.abs(z[i] - z[j]).max() <= GROUPING_TOL:
                    raise ValueError(f"jump vectors {j} and {i} coincide; group them first")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "vectors", z)
        if not self.groups:
            object.__setattr__(self, "groups", tuple(range(len(w))))

    @classmethod
    def from_geometry(cls, geometry: QuotientGeometry) -> "LevyAtomSet":
        w, z = geometry.levy_matrix()
        if len(w) == 0:
            z = np.zeros((0, geometry.alphabet.size))
        return cls(w, z, tuple(a.group for a in geometry.levy_atoms))

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def __len__(self) -> int:
        return len(self.weights)


def _poisson_range(lam: float, tail: float) -> tuple[np.ndarray, np.ndarray, float]:
    """Symmetric quantile cut of Poi(lam) with each discarded tail at most ``tail / 2``."""
    lo = int(max(stats.poisson.ppf(tail / 2, lam) - 1, 0))
    hi = int(stats.poisson.isf(tail / 2, lam) + 1)
    k = np.arange(lo, hi + 1)
    pmf = stats.poisson.pmf(k, lam)
    lost = float(stats.poisson.cdf(lo - 1, lam) + stats.poisson.sf(hi, lam))
    return k, pmf, lost


def compound_poisson_law(atoms: LevyAtomSet, tol: float = 1e-12) -> DiscreteDistribution:
    """Law of (N_1, ..., N_K) with independent N_i ~ Poi(w_i); embedding is sum N_i z_i."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    d = atoms.vectors.shape[1]
    if len(atoms) == 0:
        return DiscreteDistribution.point_mass((0,), space="levy", embedding=np.zeros(d))
    per = tol / len(atoms)
    ranges, pmfs, kept = [], [], 1.0
    for w in atoms.weights:
        k, pmf, lost = _poisson_range(float(w), per)
        ranges.append(k)
        pmfs.append(pmf)
        kept *= 1.0 - lost
    grids = np.meshgrid(*ranges, indexing="ij")
    keys = np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)
    mass_grids = np.meshgrid(*pmfs, indexing="ij")
    masses = np.prod(np.stack([g.ravel() for g in mass_grids], axis=1), axis=1)
    deficit = max(1.0 - kept, 0.0)
    emb = keys @ atoms.vectors
    return DiscreteDistribution.from_arrays(keys, masses, deficit, emb, space="levy", prune=0.0)


def quotient_rekey(law: DiscreteDistribution, geometry: QuotientGeometry, tol: float = GROUPING_TOL):
    """Group atoms whose embedded points coincide, keyed by integer quotient coordinates."""
    coords = geometry.quotient_coords(law.embedding, tol)
    return DiscreteDistribution.from_arrays(
        coords, law.masses, law.deficit, coords @ geometry.quotient_basis.T, space="quotient"
    )


def projected_limit_experiment(geometry: QuotientGeometry, tol: float = 1e-12) -> BinaryExperiment:
    """(L(J), L(J + shift)) on the quotient lattice."""
    null = quotient_rekey(compound_poisson_law(LevyAtomSet.from_geometry(geometry), tol), geometry)
    shift = geometry.quotient_coords(geometry.delta_shift[None, :])[0]
    return BinaryExperiment(null, null.translate(shift, geometry.delta_shift))


def levy_cf(atoms: LevyAtomSet, v) -> complex:
    v = np.asarray(v, dtype=float)
    return complex(np.exp(np.sum(atoms.weights * (np.exp(1j * (atoms.vectors @ v)) - 1))))


@dataclass(frozen=True)
class ShiftExperimentSpec:
    kind: str
    c: float
    pi: float = 0.5
    truncation: float = SHIFT_TAIL

    def __post_init__(self):
        if self.kind not in {"poisson", "skellam", "gaussian"}:
            raise ValueError(f"unknown shift experiment {self.kind!r}")
        if self.c <= 0:
            raise ValueError("c must be positive")
        if not 0 < self.truncation <= 1e-6:
            raise ValueError("truncation must lie in (0, 1e-6]")
        if self.kind == "skellam" and not 0 < self.pi < 1:
            raise ValueError("skellam shift needs pi in (0, 1)")

    def delta(self, epsilon: float) -> Estimate:
        if self.kind == "gaussian":
            return gaussian_shift_delta(self.c, epsilon)
        if self.kind == "poisson":
            return privacy_delta(poisson_shift_experiment(self.c, self.truncation), epsilon)
        return privacy_delta(skellam_shift_experiment(self.c, self.pi, self.truncation), epsilon)


def _poisson_from_zero(lam: float, tail: float) -> tuple[np.ndarray, float]:
    """pmf of Poi(lam) on 0..K with the upper tail beyond K below ``tail``."""
    if lam <= 0:
        return np.ones(1), 0.0
    K = int(math.ceil(lam + 10 * math.sqrt(lam) + 10))
    while True:
        logp = stats.poisson.logpmf(K, lam)
        # geometric majorant of the tail beyond K
        bound = math.exp(logp) * (lam / (K + 1)) / (1 - lam / (K + 1))
        if bound < tail:
            break
        K = int(K * 1.25) + 1
    k = np.arange(K + 1)
    return stats.poisson.pmf(k, lam), bound


def poisson_shift_experiment(c: float, tol: float = SHIFT_TAIL) -> BinaryExperiment:
    """(Poi(c^-2), 1 + Poi(c^-2)) on the integers."""
    if c <= 0:
        raise ValueError("c must be positive")
    pmf, lost = _poisson_from_zero(c**-2, tol)
    keys = np.arange(len(pmf))[:, None]
    null = DiscreteDistribution.from_arrays(keys, pmf, lost, space="integers", prune=0.0)
    return BinaryExperiment(null, null.translate((1,)))


def skellam_shift_experiment(c: float, pi: float, tol: float = SHIFT_TAIL) -> BinaryExperiment:
    """Law of c(U - V - (1-2pi)c^-2) against the same with U shifted by one.

    Keys are the integers U - V; the embedding carries the centered, scaled value.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    if not 0 < pi < 1:
        raise ValueError("pi must lie in (0, 1)")
    lam = c**-2
    pu, lu = _poisson_from_zero((1 - pi) * lam, tol / 2)
    pv, lv = _poisson_from_zero(pi * lam, tol / 2)
    pmf = np.convolve(pu, pv[::-1])
    keys = np.arange(-(len(pv) - 1), len(pu))
    emb = c * (keys - (1 - 2 * pi) * lam)
    null = DiscreteDistribution.from_arrays(
        keys[:, None], pmf, lu + lv, emb[:, None], space="integers", prune=0.0
    )
    return BinaryExperiment(null, null.translate((1,), np.array([c])))


def _phi(x):
    """Standard normal CDF, clamped to {0, 1} outside [-40, 40]."""
    x = np.asarray(x, dtype=float)
    out = special.ndtr(np.clip(x, -PHI_CLAMP, PHI_CLAMP))
    out = np.where(x < -PHI_CLAMP, 0.0, out)
    return np.where(x > PHI_CLAMP, 1.0, out)


def gaussian_shift_delta(c: float, epsilon: float) -> Estimate:
    """Privacy curve of (N(0,1), N(c,1)): Phi(-eps/c + c/2) - e^eps Phi(-eps/c - c/2)."""
    if c <= 0:
        raise ValueError("c must be positive")
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    a = float(_phi(-epsilon / c + c / 2))
    b = math.exp(epsilon) * float(_phi(-epsilon / c - c / 2))
    value = max(a - b, 0.0)
    return Estimate(value, 1e-14 * (a + b))


def _cell_grid(c: float, tol: float):
    """Lattice points z_k = c(k - c^-2), their Poisson masses and the discarded tail."""
    pmf, lost = _poisson_from_zero(c**-2, min(tol, 1e-6) * 1e-3)
    z = c * (np.arange(len(pmf)) - c**-2)
    return z, pmf, lost


def _simpson(f, a, b, m):
    """Composite Simpson on each row interval [a_i, b_i] with m (even) panels."""
    x = a[:, None] + (b - a)[:, None] * np.linspace(0.0, 1.0, m + 1)[None, :]
    w = np.ones(m + 1)
    w[1:-1:2] = 4
    w[2:-1:2] = 2
    return (f(x) @ w) * (b - a) / (3 * m)


def _crossing_radius(h: np.ndarray) -> np.ndarray:
    """r with phi(x) >= h exactly on |x| <= r (0 when h exceeds the density peak)."""
    with np.errstate(divide="ignore"):
        arg = -2 * np.log(h * math.sqrt(2 * math.pi))
    return np.sqrt(np.maximum(arg, 0.0))


def jitter_tv_to_gaussian(c: float, tol: float = 1e-10) -> Estimate:
    """TV between the uniformly jittered Poisson lattice law and N(0, 1).

    Each cell is cut where the normal density crosses the cell height, and
    every piece is integrated by composite Simpson, doubling the panel count
    from 8 until successive estimates agree to ``tol / pieces``.
    """
    if not 0 < c <= 1:
        raise ValueError("c must lie in (0, 1]")
    z, pmf, lost = _cell_grid(c, tol)
    lo, hi = z - c / 2, z + c / 2
    h = pmf / c
    r = _crossing_radius(h)
    c1, c2 = np.clip(-r, lo, hi), np.clip(r, lo, hi)
    a = np.concatenate([lo, c1, c2])
    b = np.concatenate([c1, c2, hi])
    hh = np.concatenate([h, h, h])
    per_piece = tol / len(a)

    def integrand(rows):
        return lambda x: np.abs(hh[rows, None] - stats.norm.pdf(x))

    active = np.arange(len(a))
    m = 8
    prev = _simpson(integrand(active), a, b, m)
    result = np.empty(len(a))
    while len(active):
        m *= 2
        cur = _simpson(integrand(active), a[active], b[active], m)
        done = np.abs(cur - prev) < per_piece
        result[active[done]] = cur[done]
        if m >= 1 << 14:
            result[active[~done]] = cur[~done]
            break
        active, prev = active[~done], cur[~done]
    total = float(result.sum())
    # Gaussian mass left of the first cell and right of the last one
    total += float(_phi(lo[0])) + float(_phi(-hi[-1]))
    return Estimate(0.5 * total, 0.5 * lost + tol)


def jitter_tv_exact(c: float) -> Estimate:
    """Same quantity integrated cell by cell at the crossing points of phi with the cell height."""
    z, pmf, lost = _cell_grid(c, 1e-12)
    lo, hi = z - c / 2, z + c / 2
    h = pmf / c
    total = 0.0
    for a, b, hk in zip(lo, hi, h):
        # phi(x) >= hk exactly on |x| <= r
        r = math.sqrt(max(-2 * math.log(hk * math.sqrt(2 * math.pi)), 0.0)) if hk > 0 else math.inf
        cuts = sorted({a, b, *(t for t in (-r, r) if a < t < b)})
        for s, t in zip(cuts[:-1], cuts[1:]):
            g = float(_phi(t) - _phi(s)) if s < 0 else float(_phi(-s) - _phi(-t))
            total += abs(hk * (t - s) - g)
    total += float(_phi(lo[0])) + float(_phi(-hi[-1]))
    return Estimate(0.5 * total, 0.5 * lost + 1e-12)


def _cell_masses(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Phi(b) - Phi(a), taking the difference on the side of the smaller tail."""
    left = _phi(b) - _phi(a)
    right = _phi(-a) - _phi(-b)
    return np.where(a >= 0, right, left)


def rounding_tv_to_poisson(c: float, tol: float = 1e-10) -> Estimate:
    """TV between nearest-lattice rounding of N(0, 1) and the Poisson lattice law."""
    if not 0 < c <= 1:
        raise ValueError("c must lie in (0, 1]")
    z, pmf, lost = _cell_grid(c, tol)
    lo, hi = z - c / 2, z + c / 2
    lo = lo.copy()
    lo[0] = -np.inf
    g = _cell_masses(lo, hi)
    total = float(np.abs(g - pmf).sum()) + float(_phi(-hi[-1]))
    return Estimate(0.5 * total, 0.5 * lost + 1e-12)


@dataclass(frozen=True)
class DeltaComparisonRow:
    c: float
    epsilon: float
    delta_poi: Estimate
    delta_gauss: Estimate
    gap: Estimate
    bound: Estimate


def delta_comparison(c: float, epsilon: float, kind: str = "poisson", pi: float = 0.5, tol: float = 1e-10):
    """Lattice-vs-Gaussian privacy gap together with the kernel bound (1+e^eps)(jitter + rounding)."""
    lattice = ShiftExperimentSpec(kind, c, pi).delta(epsilon)
    gauss = gaussian_shift_delta(c, epsilon)
    gap = Estimate(abs(lattice.value - gauss.value), lattice.error + gauss.error)
    jit = jitter_tv_to_gaussian(c, tol)
    rnd = rounding_tv_to_poisson(c, tol)
    factor = 1 + math.exp(epsilon)
    bound = Estimate(factor * (jit.value + rnd.value), factor * (jit.error + rnd.error))
    return DeltaComparisonRow(c, epsilon, lattice, gauss, gap, bound)


def write_delta_table(rows: Sequence[DeltaComparisonRow], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["c", "epsilon", "delta_poi", "delta_poi_err", "delta_gauss", "delta_gauss_err",
                    "gap", "gap_err", "bound", "bound_err"])
        for r in rows:
            w.writerow([repr(r.c), repr(r.epsilon), *(repr(float(x)) for e in
                        (r.delta_poi, r.delta_gauss, r.gap, r.bound) for x in e)])


def write_limit_csv(law: DiscreteDistribution, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["key", "embedding", "mass", "mass_err"])
        emb = law.embedding if law.embedding is not None else law.keys
        for key, e, m in zip(law.keys, emb, law.masses):
            w.writerow([" ".join(str(int(v)) for v in key), " ".join(repr(float(v)) for v in e),
                        repr(float(m)), repr(law.deficit)])
