"""Finite discrete laws on integer lattices and binary experiments built from them.

Every law carries a ``deficit``: probability mass that was pruned or truncated
away.  Distances and privacy curves computed here return an :class:`Estimate`
whose ``error`` is a deterministic bound derived from those deficits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

NORMALIZATION_TOL = 1e-12
DEFAULT_PRUNE = 1e-15
ATOM_CAP = 50_000_000


class ResourceLimitError(RuntimeError):
    """An exact computation would exceed the configured atom-count cap."""


class KeySpaceError(ValueError):
    """Two laws live on structurally different key spaces."""


class Estimate(NamedTuple):
    value: float
    error: float


def _encode(keys: np.ndarray) -> tuple[np.ndarray, bool]:
    """Collapse integer rows to scalar codes; second item False if overflow forbids it."""
    if keys.shape[1] == 0:
        return np.zeros(len(keys), dtype=np.int64), True
    lo = keys.min(axis=0)
    span = keys.max(axis=0) - lo + 1
    total = 1
    for s in span.tolist():
        total *= int(s)
    if total >= 2**62:
        return keys, False
    radix = np.ones(keys.shape[1], dtype=np.int64)
    for i in range(keys.shape[1] - 2, -1, -1):
        radix[i] = radix[i + 1] * span[i + 1]
    return (keys - lo) @ radix, True


def group_keys(keys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(first_index, inverse)`` identifying equal rows; groups come out in lexicographic order."""
    codes, ok = _encode(keys)
    if ok:
        _, first, inverse = np.unique(codes, return_index=True, return_inverse=True)
    else:
        _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    return first, inverse.reshape(-1)


def merge_atoms(keys: np.ndarray, masses: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sum masses of equal keys; output sorted by key."""
    if not len(keys):
        return keys, masses
    first, inverse = group_keys(keys)
    return keys[first], np.bincount(inverse, weights=masses, minlength=len(first))


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Sparse law on ``Z^dim``.

    Build instances with :meth:`from_arrays` (merges duplicates, prunes) or
    :meth:`point_mass`; the raw constructor assumes keys are already unique and
    sorted.  ``space`` tags the meaning of the coordinates so that laws on
    incomparable key spaces are never compared.
    """

    keys: np.ndarray
    masses: np.ndarray
    deficit: float = 0.0
    embedding: np.ndarray | None = None
    space: str = "lattice"

    def __post_init__(self):
        if self.keys.ndim != 2 or self.keys.shape[1] < 1:
            raise ValueError("keys must be a 2-d array with at least one column")
        if len(self.keys) != len(self.masses):
            raise ValueError("keys and masses differ in length")
        if self.embedding is not None and len(self.embedding) != len(self.keys):
            raise ValueError("embedding must align with keys")
        if np.any(self.masses <= 0):
            raise ValueError("zero or negative masses must be removed before construction")
        if self.deficit < 0:
            raise ValueError("deficit must be nonnegative")
        total = float(self.masses.sum()) + self.deficit
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"masses plus deficit sum to {total!r}, not 1")
        self.keys.setflags(write=False)
        self.masses.setflags(write=False)
        if self.embedding is not None:
            self.embedding.setflags(write=False)

    @classmethod
    def from_arrays(
        cls,
        keys,
        masses,
        deficit: float = 0.0,
        embedding=None,
        space: str = "lattice",
        prune: float = 0.0,
    ) -> "DiscreteDistribution":
        keys = np.asarray(keys, dtype=np.int64)
        if keys.ndim == 1:
            keys = keys[:, None]
        masses = np.asarray(masses, dtype=np.float64)
        if embedding is not None:
            embedding = np.asarray(embedding, dtype=np.float64)
            if embedding.ndim == 1:
                embedding = embedding[:, None]
        if len(keys):
            first, inverse = group_keys(keys)
            masses = np.bincount(inverse, weights=masses, minlength=len(first))
            keys = keys[first]
            if embedding is not None:
                embedding = embedding[first]
        drop = masses <= prune
        if np.any(drop):
            deficit += float(masses[drop].sum())
            keep = ~drop
            keys, masses = keys[keep], masses[keep]
            if embedding is not None:
                embedding = embedding[keep]
        return cls(keys, masses, float(deficit), embedding, space)

    @classmethod
    def point_mass(cls, key: Sequence[int], space: str = "lattice", embedding=None):
        emb = None if embedding is None else np.asarray([embedding], dtype=np.float64)
        return cls(np.asarray([key], dtype=np.int64), np.ones(1), 0.0, emb, space)

    @property
    def dim(self) -> int:
        return self.keys.shape[1]

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    @property
    def atoms(self) -> dict[tuple[int, ...], float]:
        return {tuple(int(v) for v in k): float(m) for k, m in zip(self.keys, self.masses)}

    def __len__(self) -> int:
        return len(self.masses)

    def mass_of(self, key: Sequence[int]) -> float:
        hit = np.all(self.keys == np.asarray(key, dtype=np.int64), axis=1)
        return float(self.masses[hit].sum())

    def with_space(self, space: str, embedding=None) -> "DiscreteDistribution":
        emb = self.embedding if embedding is None else np.asarray(embedding, dtype=np.float64)
        return DiscreteDistribution(self.keys, self.masses, self.deficit, emb, space)

    def translate(self, shift: Sequence[int], embedding_shift=None) -> "DiscreteDistribution":
        """Law of ``key + shift`` (and ``embedding + embedding_shift`` when given)."""
        shift = np.asarray(shift, dtype=np.int64)
        emb = self.embedding
        if emb is not None and embedding_shift is not None:
            emb = emb + np.asarray(embedding_shift, dtype=np.float64)
        return DiscreteDistribution(self.keys + shift, self.masses, self.deficit, emb, self.space)

    def expectation(self, values: np.ndarray) -> float:
        return float(np.dot(self.masses, values))

    def characteristic_function(self, freq: np.ndarray, use_embedding: bool = False) -> complex:
        pts = self.embedding if use_embedding else self.keys
        return complex(np.dot(self.masses, np.exp(1j * (pts @ np.asarray(freq, dtype=np.float64)))))


@dataclass(frozen=True)
class BinaryExperiment:
    """An ordered pair (null, alternative) on one key space."""

    null_law: DiscreteDistribution
    alt_law: DiscreteDistribution

    def __post_init__(self):
        _check_compatible(self.null_law, self.alt_law)


@dataclass(frozen=True)
class PrivacyCurve:
    points: tuple[tuple[float, float, float], ...]

    @property
    def epsilons(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def deltas(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])

    @property
    def errors(self) -> np.ndarray:
        return np.array([p[2] for p in self.points])

    def is_monotone(self, slack: float = 1e-12) -> bool:
        d, e = self.deltas, self.errors
        return bool(np.all(d[1:] <= d[:-1] + e[1:] + e[:-1] + slack))


def _check_compatible(p: DiscreteDistribution, q: DiscreteDistribution) -> None:
    if p.dim != q.dim:
        raise KeySpaceError(f"dimension mismatch: {p.dim} vs {q.dim}")
    if p.space != q.space:
        raise KeySpaceError(f"key space mismatch: {p.space!r} vs {q.space!r}")


def align(p: DiscreteDistribution, q: DiscreteDistribution):
    """Masses of ``p`` and ``q`` on the union of their supports, as ``(keys, pm, qm)``."""
    _check_compatible(p, q)
    keys = np.concatenate([p.keys, q.keys])
    first, inverse = group_keys(keys)
    pm = np.zeros(len(first))
    qm = np.zeros(len(first))
    np.add.at(pm, inverse[: len(p)], p.masses)
    np.add.at(qm, inverse[len(p):], q.masses)
    return keys[first], pm, qm


def tv_distance(p: DiscreteDistribution, q: DiscreteDistribution) -> Estimate:
    _, pm, qm = align(p, q)
    value = 0.5 * float(np.abs(pm - qm).sum())
    return Estimate(min(value, 1.0), 0.5 * (p.deficit + q.deficit))


def privacy_delta_raw(exp: BinaryExperiment, epsilon: float) -> float:
    """Unclamped hockey-stick sum; can sit a rounding error below zero."""
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    _, pm, qm = align(exp.null_law, exp.alt_law)
    diff = qm - math.exp(epsilon) * pm
    return float(diff[diff > 0].sum())


def privacy_delta(exp: BinaryExperiment, epsilon: float) -> Estimate:
    raw = privacy_delta_raw(exp, epsilon)
    err = exp.alt_law.deficit + math.exp(epsilon) * exp.null_law.deficit
    return Estimate(min(max(raw, 0.0), 1.0), err)


def privacy_curve(exp: BinaryExperiment, eps_grid: Sequence[float]) -> PrivacyCurve:
    eps = [float(e) for e in eps_grid]
    if not eps:
        raise ValueError("empty epsilon grid")
    if any(e < 0 for e in eps) or any(b < a for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilon grid must be sorted and nonnegative")
    _, pm, qm = align(exp.null_law, exp.alt_law)
    pts = []
    for e in eps:
        diff = qm - math.exp(e) * pm
        d = min(max(float(diff[diff > 0].sum()), 0.0), 1.0)
        pts.append((e, d, exp.alt_law.deficit + math.exp(e) * exp.null_law.deficit))
    curve = PrivacyCurve(tuple(pts))
    if not curve.is_monotone():
        raise ArithmeticError("privacy curve is not nonincreasing beyond its error bars")
    return curve


def pushforward(
    p: DiscreteDistribution,
    f: Callable,
    vectorized: bool = False,
    space: str | None = None,
) -> DiscreteDistribution:
    """Image law under a key map ``f``.

    With ``vectorized=True`` ``f`` receives the whole ``(N, dim)`` key array and
    returns an ``(N, dim')`` array; otherwise it maps one key tuple at a time.
    Embeddings are dropped since ``f`` need not respect them.
    """
    if vectorized:
        new = np.asarray(f(p.keys), dtype=np.int64)
    else:
        new = np.asarray([tuple(f(tuple(int(v) for v in k))) for k in p.keys], dtype=np.int64)
    if new.ndim == 1:
        new = new[:, None]
    return DiscreteDistribution.from_arrays(new, p.masses, p.deficit, space=space or p.space)


def product(p: DiscreteDistribution, q: DiscreteDistribution, space: str | None = None) -> DiscreteDistribution:
    keys = np.concatenate(
        [np.repeat(p.keys, len(q), axis=0), np.tile(q.keys, (len(p), 1))], axis=1
    )
    masses = np.outer(p.masses, q.masses).reshape(-1)
    emb = None
    if p.embedding is not None and q.embedding is not None:
        emb = np.concatenate(
            [np.repeat(p.embedding, len(q), axis=0), np.tile(q.embedding, (len(p), 1))], axis=1
        )
    deficit = p.deficit + q.deficit - p.deficit * q.deficit
    return DiscreteDistribution(keys, masses, deficit, emb, space or f"{p.space}x{q.space}")


def convolve(
    p: DiscreteDistribution,
    q: DiscreteDistribution,
    prune: float = DEFAULT_PRUNE,
    atom_cap: int = ATOM_CAP,
    chunk: int = 4_000_000,
) -> DiscreteDistribution:
    """Law of the key sum of independent draws from ``p`` and ``q``.

    Pairs whose product mass is at most ``prune`` are never materialized; their
    mass goes to the deficit.  ``atom_cap`` bounds the number of retained pairs.
    """
    _check_compatible(p, q)
    order = np.argsort(-q.masses, kind="stable")
    qk, qm = q.keys[order], q.masses[order]
    neg = -qm
    if prune > 0:
        # number of q atoms whose product with each p atom stays above prune
        counts = np.searchsorted(neg, -prune / p.masses, side="left")
    else:
        counts = np.full(len(p), len(q))
    n_pairs = int(counts.sum())
    if n_pairs > atom_cap:
        raise ResourceLimitError(f"convolution needs {n_pairs} pairs, above the atom cap {atom_cap}")
    cum = np.concatenate([[0.0], np.cumsum(qm)])
    deficit = p.deficit + q.deficit - p.deficit * q.deficit
    deficit += float(np.dot(p.masses, cum[-1] - cum[counts]))

    key_parts, mass_parts, pending = [], [], 0
    start = 0
    bounds = np.cumsum(counts)
    while start < len(p):
        base = bounds[start - 1] if start else 0
        stop = max(int(np.searchsorted(bounds, base + chunk, side="right")), start + 1)
        c = counts[start:stop]
        rows = np.repeat(np.arange(start, stop), c)
        offs = np.arange(int(c.sum())) - np.repeat(np.cumsum(c) - c, c)
        key_parts.append(p.keys[rows] + qk[offs])
        mass_parts.append(p.masses[rows] * qm[offs])
        pending += len(rows)
        if pending > chunk:
            k, m = merge_atoms(np.concatenate(key_parts), np.concatenate(mass_parts))
            key_parts, mass_parts, pending = [k], [m], len(m)
        start = stop
    keys = np.concatenate(key_parts) if key_parts else np.zeros((0, p.dim), dtype=np.int64)
    masses = np.concatenate(mass_parts) if mass_parts else np.zeros(0)
    return DiscreteDistribution.from_arrays(keys, masses, deficit, space=p.space, prune=prune)


def lecam_upper_bound(e1: BinaryExperiment, e2: BinaryExperiment) -> Estimate:
    a = tv_distance(e1.null_law, e2.null_law)
    b = tv_distance(e1.alt_law, e2.alt_law)
    return Estimate(max(a.value, b.value), max(a.error, b.error))
