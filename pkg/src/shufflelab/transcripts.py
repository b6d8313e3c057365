"""Finite-n randomizers, exact shuffled-histogram laws, and their projections."""
from __future__ import annotations

import csv
import functools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .distributions import (
    ATOM_CAP,
    DEFAULT_PRUNE,
    BinaryExperiment,
    DiscreteDistribution,
    Estimate,
    ResourceLimitError,
    convolve,
    tv_distance,
)
from .geometry import AlphabetSpec, DominantStructure, QuotientGeometry, build_geometry

DEFICIT_BUDGET = 1e-6


@dataclass(frozen=True)
class Composition:
    """How many ones the null dataset holds at population size ``n``.

    ``kind`` is ``"round"`` (k = round(pi n)), ``"fixed"`` (k = value) or
    ``"custom"`` (k = value[n]).  Results are clamped to ``[0, n-1]``.
    """

    kind: str = "round"
    value: object = None

    def __post_init__(self):
        if self.kind not in {"round", "fixed", "custom"}:
            raise ValueError(f"unknown composition rule {self.kind!r}")

    def k(self, n: int, pi: float) -> int:
        if self.kind == "round":
            k = math.floor(pi * n + 0.5)
        elif self.kind == "fixed":
            k = int(self.value)
        else:
            table = {int(a): int(b) for a, b in dict(self.value).items()}
            if n not in table:
                raise ValueError(f"custom composition has no entry for n={n}")
            k = table[n]
        return min(max(k, 0), n - 1)

    def to_json(self):
        if self.kind == "round":
            return "round"
        if self.kind == "fixed":
            return {"fixed": int(self.value)}
        return {"custom": {str(a): int(b) for a, b in dict(self.value).items()}}

    @classmethod
    def from_json(cls, obj) -> "Composition":
        if obj in (None, "round"):
            return cls("round")
        if isinstance(obj, int):
            return cls("fixed", obj)
        if isinstance(obj, dict) and len(obj) == 1:
            (kind, value), = obj.items()
            return cls(kind, value)
        raise ValueError(f"malformed composition {obj!r}")


@dataclass(frozen=True)
class RealizedRandomizer:
    n: int
    W0: np.ndarray
    W1: np.ndarray

    def __post_init__(self):
        for b, W in enumerate((self.W0, self.W1)):
            if np.any(W < 0):
                raise ValueError(f"W{b} has a negative entry")
            if abs(W.sum() - 1.0) > 1e-12:
                raise ValueError(f"W{b} sums to {W.sum()!r}")

    def W(self, b: int) -> np.ndarray:
        return self.W0 if b == 0 else self.W1


@dataclass(frozen=True, eq=False)
class RandomizerScenario:
    alphabet: AlphabetSpec
    ds: DominantStructure
    pi_limit: float
    composition: Composition = Composition()
    dominant_correction: Mapping[int, Mapping[str, float]] = field(default_factory=dict)
    name: str = "custom"

    def __post_init__(self):
        if not 0.0 <= self.pi_limit <= 1.0:
            raise ValueError(f"pi={self.pi_limit} outside [0, 1]")
        self.ds.check_alphabet(self.alphabet)
        for b, corr in self.dominant_correction.items():
            extra = set(corr) - set(self.ds.dominant(int(b)))
            if extra:
                raise ValueError(f"dominant_correction[{b}] names non-dominant symbols {sorted(extra)}")

    @functools.cached_property
    def geometry(self) -> QuotientGeometry:
        return build_geometry(self.alphabet, self.ds, self.pi_limit)

    def k_n(self, n: int) -> int:
        return self.composition.k(n, self.pi_limit)

    def validate_grid(self, n_grid: Sequence[int]) -> None:
        for n in n_grid:
            realize(self, n)

    def regime_defect(self, n: int) -> float:
        """Left side of the quantitative regime condition at ``n`` (should be O(1/n))."""
        r = realize(self, n)
        idx = self.alphabet.index
        total = 0.0
        for b in (0, 1):
            D, p, alpha = self.ds.sides()[b]
            W = r.W(b)
            side = sum(abs(W[idx[y]] - p[y]) for y in D)
            side += sum(abs(n * W[idx[y]] - alpha.get(y, 0.0)) for y in self.alphabet.symbols if y not in D)
            total = max(total, side)
        return total + abs(self.k_n(n) / n - self.pi_limit)

    def to_json(self) -> dict:
        out = {
            "name": self.name,
            "alphabet": list(self.alphabet.symbols),
            "D0": list(self.ds.D0),
            "D1": list(self.ds.D1),
            "p0": dict(self.ds.p0),
            "p1": dict(self.ds.p1),
            "alpha0": dict(self.ds.alpha0),
            "alpha1": dict(self.ds.alpha1),
            "pi": self.pi_limit,
            "composition": self.composition.to_json(),
        }
        if self.dominant_correction:
            out["dominant_correction"] = {str(b): dict(c) for b, c in self.dominant_correction.items()}
        return out


def scenario_from_json(doc: Mapping) -> RandomizerScenario:
    for key in ("alphabet", "D0", "D1", "p0", "p1", "pi"):
        if key not in doc:
            raise ValueError(f"scenario document lacks field {key!r}")

    def law(p, D):
        if isinstance(p, Mapping):
            return {str(k): float(v) for k, v in p.items()}
        if len(p) != len(D):
            raise ValueError("list-valued dominant law must align with its dominant set")
        return {str(y): float(v) for y, v in zip(D, p)}

    D0 = [str(s) for s in doc["D0"]]
    D1 = [str(s) for s in doc["D1"]]
    ds = DominantStructure(
        D0=tuple(D0),
        D1=tuple(D1),
        p0=law(doc["p0"], D0),
        p1=law(doc["p1"], D1),
        alpha0={str(k): float(v) for k, v in doc.get("alpha0", {}).items()},
        alpha1={str(k): float(v) for k, v in doc.get("alpha1", {}).items()},
    )
    corr = {
        int(b): {str(k): float(v) for k, v in c.items()}
        for b, c in (doc.get("dominant_correction") or {}).items()
    }
    return RandomizerScenario(
        alphabet=AlphabetSpec(tuple(doc["alphabet"])),
        ds=ds,
        pi_limit=float(doc["pi"]),
        composition=Composition.from_json(doc.get("composition")),
        dominant_correction=corr,
        name=str(doc.get("name", "custom")),
    )


def load_scenario(path) -> RandomizerScenario:
    with open(path, encoding="utf-8") as fh:
        return scenario_from_json(json.load(fh))


def save_scenario(scenario: RandomizerScenario, path) -> None:
    Path(path).write_text(json.dumps(scenario.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def realize(scenario: RandomizerScenario, n: int) -> RealizedRandomizer:
    """Default finite-n rule: rare cells get alpha/n, dominant cells share the rest in proportion to p + c/n."""
    if n < 1:
        raise ValueError("n must be positive")
    idx = scenario.alphabet.index
    Ws = []
    for b, (D, p, alpha) in enumerate(scenario.ds.sides()):
        W = np.zeros(scenario.alphabet.size)
        rare = 0.0
        for y, a in alpha.items():
            W[idx[y]] = a / n
            rare += a / n
        if rare > 1.0:
            raise ValueError(f"n={n} too small: rare mass {rare:.4g} of input {b} exceeds 1")
        corr = scenario.dominant_correction.get(b, {})
        base = {y: p[y] + corr.get(y, 0.0) / n for y in D}
        for y, v in base.items():
            if v < 0:
                raise ValueError(f"n={n} too small: W{b}({y}) would be negative ({v:.4g} before scaling)")
        scale = (1.0 - rare) / sum(base.values())
        for y, v in base.items():
            W[idx[y]] = v * scale
        Ws.append(W)
    return RealizedRandomizer(n, Ws[0], Ws[1])


@functools.lru_cache(maxsize=256)
def _multinomial_cached(m: int, p: tuple, prune: float):
    return _multinomial_arrays(m, np.asarray(p), prune)


def _multinomial_arrays(m: int, p: np.ndarray, prune: float):
    d = len(p)
    keys = np.zeros((1, d), dtype=np.int64)
    if m == 0:
        return keys, np.ones(1), 0.0
    support = [i for i in range(d) if p[i] > 0]
    if not support:
        raise ValueError("probability vector has no positive entry")
    order = sorted(support, key=lambda i: (p[i], i))
    tails = np.cumsum(p[order][::-1])[::-1]
    rem = np.array([m], dtype=np.int64)
    mass = np.ones(1)
    deficit = 0.0
    for pos, i in enumerate(order[:-1]):
        q = min(float(p[i] / tails[pos]), 1.0)
        thr = np.minimum(prune / mass, 1.0) if prune > 0 else np.zeros(len(mass))
        lo = np.maximum(stats.binom.ppf(thr, rem, q) - 1, 0).astype(np.int64)
        hi = np.minimum(stats.binom.isf(thr, rem, q) + 1, rem).astype(np.int64)
        hi = np.maximum(hi, lo)
        width = hi - lo + 1
        state = np.repeat(np.arange(len(mass)), width)
        x = np.repeat(lo, width) + (np.arange(int(width.sum())) - np.repeat(np.cumsum(width) - width, width))
        pmf = stats.binom.pmf(x, rem[state], q)
        new_mass = mass[state] * pmf
        # mass never generated: tails outside [lo, hi]
        outside = stats.binom.cdf(lo - 1, rem, q) + stats.binom.sf(hi, rem, q)
        deficit += float(np.dot(mass, outside))
        keep = new_mass > prune
        deficit += float(new_mass[~keep].sum())
        state, x, new_mass = state[keep], x[keep], new_mass[keep]
        keys = keys[state]
        keys[:, i] = x
        rem = rem[state] - x
        mass = new_mass
    keys[:, order[-1]] = rem
    return keys, mass, deficit


def multinomial_law(m: int, p, prune: float = DEFAULT_PRUNE, space: str = "histogram") -> DiscreteDistribution:
    """Exact law of the count vector of ``m`` independent categorical(p) draws.

    Coordinates are peeled off one at a time as conditional binomials, smallest
    probabilities first, so rare cells never branch beyond their tiny supports.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    p = np.asarray(p, dtype=float)
    keys, masses, deficit = _multinomial_cached(int(m), tuple(p.tolist()), float(prune))
    return DiscreteDistribution.from_arrays(keys, masses, deficit, space=space, prune=prune)


@dataclass(frozen=True)
class TranscriptLaw:
    law: DiscreteDistribution
    n: int
    k: int

    @property
    def deficit(self) -> float:
        return self.law.deficit


def transcript_law(
    scenario: RandomizerScenario,
    n: int,
    k: int,
    prune: float = DEFAULT_PRUNE,
    atom_cap: int = ATOM_CAP,
    deficit_budget: float = DEFICIT_BUDGET,
) -> TranscriptLaw:
    if not 0 <= k <= n:
        raise ValueError(f"k={k} outside [0, {n}]")
    r = realize(scenario, n)
    zeros = multinomial_law(n - k, r.W0, prune)
    ones = multinomial_law(k, r.W1, prune)
    law = convolve(zeros, ones, prune=prune, atom_cap=atom_cap)
    if law.deficit > deficit_budget:
        raise ResourceLimitError(
            f"transcript law at n={n}, k={k} lost {law.deficit:.3g} mass, above the budget {deficit_budget:g}"
        )
    return TranscriptLaw(law, n, k)


def neighboring_transcripts(scenario: RandomizerScenario, n: int, prune: float = DEFAULT_PRUNE, **kw):
    k = scenario.k_n(n)
    if k > n - 1:
        raise ValueError("composition must leave room for one more one")
    return transcript_law(scenario, n, k, prune, **kw), transcript_law(scenario, n, k + 1, prune, **kw)


def neighboring_experiment(scenario: RandomizerScenario, n: int, prune: float = DEFAULT_PRUNE, **kw) -> BinaryExperiment:
    t0, t1 = neighboring_transcripts(scenario, n, prune, **kw)
    return BinaryExperiment(t0.law, t1.law)


def center_project(
    t: TranscriptLaw,
    geometry: QuotientGeometry,
    mode: str = "jump_only",
    center_k: int | None = None,
) -> DiscreteDistribution:
    """Project a transcript law onto the quotient (``jump_only``) or carry both blocks (``full_hybrid``).

    Centering always uses ``(n - center_k) mu0 + center_k mu1``; pass the null
    composition when projecting the alternative law.
    """
    if t.law.dim != geometry.alphabet.size:
        raise ValueError("transcript law and geometry disagree on the alphabet")
    k = t.k if center_k is None else center_k
    n = t.n
    keys = t.law.keys
    if mode == "jump_only":
        fibers = keys @ geometry.fiber_matrix()
        centered = fibers - geometry.centering_coords(n, k)
        emb = centered @ geometry.quotient_basis.T
        return DiscreteDistribution.from_arrays(fibers, t.law.masses, t.law.deficit, emb, space="fiber")
    if mode == "full_hybrid":
        hhat = keys - ((n - k) * geometry.mu0 + k * geometry.mu1)
        emb = np.concatenate([hhat @ geometry.proj_G.T / math.sqrt(n), hhat @ geometry.proj_J.T], axis=1)
        return DiscreteDistribution(keys, t.law.masses, t.law.deficit, emb, space="hybrid")
    raise ValueError(f"unknown projection mode {mode!r}")


def quotient_law(projected: DiscreteDistribution, geometry: QuotientGeometry) -> DiscreteDistribution:
    """Re-key a projected law by the integer quotient coordinates of its embedded points."""
    if projected.embedding is None:
        raise ValueError("projected law carries no embedding")
    jump_block = projected.embedding[:, -geometry.alphabet.size:]
    coords = geometry.quotient_coords(jump_block)
    return DiscreteDistribution.from_arrays(
        coords, projected.masses, projected.deficit, coords @ geometry.quotient_basis.T, space="quotient"
    )


def projected_experiment(t0: TranscriptLaw, t1: TranscriptLaw, geometry: QuotientGeometry) -> BinaryExperiment:
    """(P_n^J, Q_n^J) on the shared quotient key space, both centered by the null composition."""
    p = quotient_law(center_project(t0, geometry, "jump_only"), geometry)
    q = quotient_law(center_project(t1, geometry, "jump_only", center_k=t0.k), geometry)
    return BinaryExperiment(p, q)


def recover_totals(key: Sequence[int], geometry: QuotientGeometry) -> tuple[int, int]:
    """Dominant totals (N(D0), N(D1)) carried by a ``jump_only`` key."""
    if not geometry.disjoint:
        raise ValueError("dominant totals are not quotient-measurable when D0 and D1 overlap")
    key = list(key)
    return int(key[geometry.home_component(0)]), int(key[geometry.home_component(1)])


def sample_transcripts(scenario: RandomizerScenario, n: int, k: int, seed: int, size: int) -> np.ndarray:
    """``size`` independent histograms from T_{n,k}; PCG64 seeded with the 64-bit ``seed``."""
    r = realize(scenario, n)
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.multinomial(n - k, r.W0, size=size) + rng.multinomial(k, r.W1, size=size)


def sample_transcript(scenario: RandomizerScenario, n: int, k: int, seed: int) -> tuple[int, ...]:
    return tuple(int(v) for v in sample_transcripts(scenario, n, k, seed, 1)[0])


def one_user_cf(realized: RealizedRandomizer, geometry: QuotientGeometry, b: int, u, v, n: int) -> complex:
    u = geometry.proj_G @ np.asarray(u, dtype=float)
    v = geometry.proj_J @ np.asarray(v, dtype=float)
    X = np.eye(geometry.alphabet.size) - geometry.mu(b)
    phase = (X @ geometry.proj_G @ u) / math.sqrt(n) + X @ geometry.proj_J @ v
    return complex(np.dot(realized.W(b), np.exp(1j * phase)))


def hybrid_cf(scenario: RandomizerScenario, n: int, u, v, alternative: bool = False) -> complex:
    """Exact characteristic function of the hybrid statistic via per-user factorization."""
    g = scenario.geometry
    r = realize(scenario, n)
    k = scenario.k_n(n)
    phi0 = one_user_cf(r, g, 0, u, v, n)
    phi1 = one_user_cf(r, g, 1, u, v, n)
    if not alternative:
        return phi0 ** (n - k) * phi1**k
    u = g.proj_G @ np.asarray(u, dtype=float)
    v = g.proj_J @ np.asarray(v, dtype=float)
    shift = g.mu1 - g.mu0
    extra = np.exp(1j * (u @ g.proj_G @ shift / math.sqrt(n) + v @ g.proj_J @ shift))
    return phi0 ** (n - k - 1) * phi1 ** (k + 1) * extra


def edge_shift_tv(m: int, theta, shifts_a: Sequence[int], shifts_b: Sequence[int]) -> Estimate:
    """TV between S_m + sum e_a and S_m + sum e_b for S_m ~ Mult(m, theta)."""
    theta = np.asarray(theta, dtype=float)
    S = multinomial_law(m, theta, prune=0.0)
    ea = np.bincount(np.asarray(shifts_a, dtype=int), minlength=len(theta))
    eb = np.bincount(np.asarray(shifts_b, dtype=int), minlength=len(theta))
    return tv_distance(S.translate(ea), S.translate(eb))


def write_transcript_csv(t: TranscriptLaw, alphabet: AlphabetSpec, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*alphabet.symbols, "mass", "mass_err"])
        for key, m in zip(t.law.keys, t.law.masses):
            w.writerow([*(int(v) for v in key), repr(float(m)), repr(t.law.deficit)])
