"""Dominant tangent space, its orthogonal quotient, and the limit ingredients read off from it."""
from __future__ import annotations

import cmath
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

RANK_TOL = 1e-10
GROUPING_TOL = 1e-9


class GroupingError(ValueError):
    """An embedded point could not be placed unambiguously on the quotient lattice."""


@dataclass(frozen=True)
class AlphabetSpec:
    symbols: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(str(s) for s in self.symbols))
        if not self.symbols:
            raise ValueError("alphabet must be nonempty")
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("alphabet symbols must be distinct")

    @property
    def size(self) -> int:
        return len(self.symbols)

    @property
    def index(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.symbols)}

    def unit(self, symbol: str) -> np.ndarray:
        e = np.zeros(self.size)
        e[self.index[symbol]] = 1.0
        return e

    def vector(self, values: Mapping[str, float]) -> np.ndarray:
        out = np.zeros(self.size)
        idx = self.index
        for s, v in values.items():
            out[idx[s]] = v
        return out


@dataclass(frozen=True)
class DominantStructure:
    """Dominant sets, dominant laws and rare intensities for both inputs.

    ``alpha0``/``alpha1`` may omit complement symbols (read as zero) but must
    not mention symbols inside the matching dominant set.
    """

    D0: tuple[str, ...]
    D1: tuple[str, ...]
    p0: Mapping[str, float]
    p1: Mapping[str, float]
    alpha0: Mapping[str, float]
    alpha1: Mapping[str, float]

    def __post_init__(self):
        object.__setattr__(self, "D0", tuple(self.D0))
        object.__setattr__(self, "D1", tuple(self.D1))
        for b, (D, p, alpha) in enumerate(self.sides()):
            if not D:
                raise ValueError(f"D{b} is empty")
            if len(set(D)) != len(D):
                raise ValueError(f"D{b} has repeated symbols")
            if set(p) != set(D):
                raise ValueError(f"p{b} must be given exactly on D{b}")
            if any(v <= 0 for v in p.values()):
                raise ValueError(f"p{b} has a nonpositive entry on D{b}")
            if abs(sum(p.values()) - 1.0) > 1e-12:
                raise ValueError(f"p{b} does not sum to 1")
            bad = set(alpha) & set(D)
            if bad:
                raise ValueError(f"alpha{b} is defined on dominant symbols {sorted(bad)}")
            if any(v < 0 for v in alpha.values()):
                raise ValueError(f"alpha{b} has a negative intensity")

    def sides(self):
        return ((self.D0, self.p0, self.alpha0), (self.D1, self.p1, self.alpha1))

    def dominant(self, b: int) -> tuple[str, ...]:
        return self.D0 if b == 0 else self.D1

    def law(self, b: int) -> Mapping[str, float]:
        return self.p0 if b == 0 else self.p1

    def alpha(self, b: int) -> Mapping[str, float]:
        return self.alpha0 if b == 0 else self.alpha1

    def check_alphabet(self, alphabet: AlphabetSpec) -> None:
        known = set(alphabet.symbols)
        for b, (D, _, alpha) in enumerate(self.sides()):
            missing = (set(D) | set(alpha)) - known
            if missing:
                raise ValueError(f"side {b} mentions symbols outside the alphabet: {sorted(missing)}")


def components(D0: Sequence[str], D1: Sequence[str]) -> list[tuple[str, ...]]:
    """Connected components of the hypergraph with hyperedges ``D0`` and ``D1``."""
    if not D0 or not D1:
        raise ValueError("dominant sets must be nonempty")
    if set(D0) & set(D1):
        return [tuple(dict.fromkeys([*D0, *D1]))]
    return [tuple(D0), tuple(D1)]


def orthonormal_basis(vectors: Sequence[np.ndarray], rel_tol: float = RANK_TOL) -> np.ndarray:
    """Modified Gram-Schmidt with one re-orthogonalization pass; returns rows."""
    vectors = [np.asarray(v, dtype=float) for v in vectors]
    scale = max((np.linalg.norm(v) for v in vectors), default=0.0)
    basis: list[np.ndarray] = []
    for v in vectors:
        w = v.copy()
        for _ in range(2):
            for q in basis:
                w -= (q @ w) * q
        norm = np.linalg.norm(w)
        if norm > rel_tol * scale:
            basis.append(w / norm)
    if not basis:
        return np.zeros((0, len(vectors[0]) if vectors else 0))
    return np.array(basis)


@dataclass(frozen=True)
class Jump:
    source: int
    symbol: str
    vector: np.ndarray
    group: int  # -1 for the zero vector


@dataclass(frozen=True)
class LevyAtom:
    weight: float
    vector: np.ndarray
    group: int


@dataclass(frozen=True, eq=False)
class QuotientGeometry:
    alphabet: AlphabetSpec
    ds: DominantStructure
    pi: float
    proj_G: np.ndarray
    proj_J: np.ndarray
    components: tuple[tuple[str, ...], ...]
    atoms: np.ndarray  # row c is m_C for components[c]
    delta_shift: np.ndarray
    mu0: np.ndarray
    mu1: np.ndarray
    gamma0: np.ndarray
    gamma1: np.ndarray
    sigma: np.ndarray
    jumps: tuple[Jump, ...]
    levy_atoms: tuple[LevyAtom, ...]
    quotient_basis: np.ndarray  # columns: m_C per component, then e_y for y outside D0 u D1
    quotient_labels: tuple[str, ...]

    @property
    def disjoint(self) -> bool:
        return len(self.components) == 2

    @property
    def outside_symbols(self) -> tuple[str, ...]:
        dom = set(self.ds.D0) | set(self.ds.D1)
        return tuple(s for s in self.alphabet.symbols if s not in dom)

    def mu(self, b: int) -> np.ndarray:
        return self.mu0 if b == 0 else self.mu1

    def gamma(self, b: int) -> np.ndarray:
        return self.gamma0 if b == 0 else self.gamma1

    def component_index(self, symbol: str) -> int:
        for c, comp in enumerate(self.components):
            if symbol in comp:
                return c
        raise KeyError(symbol)

    def home_component(self, b: int) -> int:
        return self.component_index(self.ds.dominant(b)[0])

    def fiber_matrix(self) -> np.ndarray:
        """Integer matrix sending a histogram to (component totals, outside counts)."""
        idx = self.alphabet.index
        A = np.zeros((self.alphabet.size, len(self.quotient_labels)), dtype=np.int64)
        for c, comp in enumerate(self.components):
            for s in comp:
                A[idx[s], c] = 1
        for j, s in enumerate(self.outside_symbols):
            A[idx[s], len(self.components) + j] = 1
        return A

    def centering_coords(self, n: int, k: int) -> np.ndarray:
        """Quotient coordinates of (n-k) mu0 + k mu1; integral because each D_b lies in one component."""
        out = np.zeros(len(self.quotient_labels), dtype=np.int64)
        out[self.home_component(0)] += n - k
        out[self.home_component(1)] += k
        return out

    def quotient_coords(self, vectors: np.ndarray, tol: float = GROUPING_TOL) -> np.ndarray:
        """Integer coordinates of points of the quotient lattice in ``quotient_basis``."""
        B = self.quotient_basis
        vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
        coef = (vectors @ B) / np.sum(B * B, axis=0)
        rounded = np.rint(coef)
        resid = np.abs(vectors - rounded @ B.T).max(axis=1) if len(vectors) else np.zeros(0)
        if np.any(resid > tol) or np.any(np.abs(coef - rounded) > tol):
            raise GroupingError(
                f"embedded point off the quotient lattice by {float(resid.max()):.3e} (tolerance {tol:g})"
            )
        return rounded.astype(np.int64)

    def levy_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """Weights and stacked jump vectors of the Levy measure."""
        if not self.levy_atoms:
            return np.zeros(0), np.zeros((0, self.alphabet.size))
        return (
            np.array([a.weight for a in self.levy_atoms]),
            np.array([a.vector for a in self.levy_atoms]),
        )

    def to_json(self) -> dict:
        return {
            "alphabet": list(self.alphabet.symbols),
            "pi": self.pi,
            "components": [list(c) for c in self.components],
            "proj_G": self.proj_G.tolist(),
            "proj_J": self.proj_J.tolist(),
            "atoms": {",".join(c): self.atoms[i].tolist() for i, c in enumerate(self.components)},
            "delta": self.delta_shift.tolist(),
            "mu0": self.mu0.tolist(),
            "mu1": self.mu1.tolist(),
            "gamma0": self.gamma0.tolist(),
            "gamma1": self.gamma1.tolist(),
            "sigma": self.sigma.tolist(),
            "jumps": [
                {"source": j.source, "symbol": j.symbol, "vector": j.vector.tolist(), "group": j.group}
                for j in self.jumps
            ],
            "levy_atoms": [
                {"weight": a.weight, "vector": a.vector.tolist(), "group": a.group} for a in self.levy_atoms
            ],
            "quotient_labels": list(self.quotient_labels),
        }


def _group_vectors(vectors: list[np.ndarray], tol: float) -> list[int]:
    reps: list[np.ndarray] = []
    out = []
    for v in vectors:
        for g, r in enumerate(reps):
            if np.linalg.norm(v - r) <= tol:
                out.append(g)
                break
        else:
            reps.append(v)
            out.append(len(reps) - 1)
    return out


def covariance_sigma(geometry: QuotientGeometry, pi: float) -> np.ndarray:
    return (1 - pi) * geometry.gamma0 + pi * geometry.gamma1


def build_geometry(alphabet: AlphabetSpec, ds: DominantStructure, pi: float) -> QuotientGeometry:
    if not 0.0 <= pi <= 1.0:
        raise ValueError(f"pi={pi} outside [0, 1]")
    ds.check_alphabet(alphabet)
    d = alphabet.size
    mus, gammas, tangent = [], [], []
    for D, p, _ in ds.sides():
        mu = alphabet.vector(p)
        mus.append(mu)
        gamma = np.zeros((d, d))
        for y in D:
            x = alphabet.unit(y) - mu
            tangent.append(x)
            gamma += p[y] * np.outer(x, x)
        gammas.append(gamma)

    Q = orthonormal_basis(tangent)
    proj_G = Q.T @ Q if len(Q) else np.zeros((d, d))
    proj_G = 0.5 * (proj_G + proj_G.T)
    proj_J = np.eye(d) - proj_G

    comps = components(ds.D0, ds.D1)
    atoms = np.array([proj_J @ alphabet.unit(c[0]) for c in comps])
    delta = proj_J @ (mus[1] - mus[0])

    jumps_raw = []
    for b, (D, _, alpha) in enumerate(ds.sides()):
        for y in alphabet.symbols:
            if y not in D:
                jumps_raw.append((b, y, proj_J @ (alphabet.unit(y) - mus[b])))
    nonzero = [v for _, _, v in jumps_raw if np.linalg.norm(v) > GROUPING_TOL]
    groups = iter(_group_vectors(nonzero, GROUPING_TOL))
    jumps = tuple(
        Jump(b, y, v, next(groups) if np.linalg.norm(v) > GROUPING_TOL else -1) for b, y, v in jumps_raw
    )

    weights: dict[int, float] = {}
    vectors: dict[int, np.ndarray] = {}
    for j in jumps:
        if j.group < 0:
            continue
        w = ((1 - pi) if j.source == 0 else pi) * ds.alpha(j.source).get(j.symbol, 0.0)
        if w > 0:
            weights[j.group] = weights.get(j.group, 0.0) + w
            vectors.setdefault(j.group, j.vector)
    levy = tuple(LevyAtom(weights[g], vectors[g], g) for g in sorted(weights))

    dom = set(ds.D0) | set(ds.D1)
    outside = [s for s in alphabet.symbols if s not in dom]
    basis = np.column_stack([*atoms, *(alphabet.unit(s) for s in outside)])
    labels = tuple("+".join(c) for c in comps) + tuple(outside)

    return QuotientGeometry(
        alphabet=alphabet,
        ds=ds,
        pi=float(pi),
        proj_G=proj_G,
        proj_J=proj_J,
        components=tuple(comps),
        atoms=atoms,
        delta_shift=delta,
        mu0=mus[0],
        mu1=mus[1],
        gamma0=gammas[0],
        gamma1=gammas[1],
        sigma=(1 - pi) * gammas[0] + pi * gammas[1],
        jumps=jumps,
        levy_atoms=levy,
        quotient_basis=basis,
        quotient_labels=labels,
    )


def delta_by_components(geometry: QuotientGeometry) -> np.ndarray:
    """Shift rebuilt from component masses: sum_C (p1(C) - p0(C)) m_C."""
    out = np.zeros(geometry.alphabet.size)
    for c, comp in enumerate(geometry.components):
        mass0 = sum(geometry.ds.p0.get(y, 0.0) for y in comp)
        mass1 = sum(geometry.ds.p1.get(y, 0.0) for y in comp)
        out += (mass1 - mass0) * geometry.atoms[c]
    return out


def hybrid_limit_cf(geometry: QuotientGeometry, u, v, shifted: bool = False) -> complex:
    u = geometry.proj_G @ np.asarray(u, dtype=float)
    v = geometry.proj_J @ np.asarray(v, dtype=float)
    expo = -0.5 * float(u @ geometry.sigma @ u)
    for a in geometry.levy_atoms:
        expo += a.weight * (cmath.exp(1j * float(v @ a.vector)) - 1)
    if shifted:
        expo += 1j * float(v @ geometry.delta_shift)
    return cmath.exp(expo)


def geometry_residuals(geometry: QuotientGeometry) -> dict[str, float]:
    """Max-norm defects of the projection identities and the quotient collapse."""
    G, J = geometry.proj_G, geometry.proj_J
    d = G.shape[0]
    collapse = 0.0
    for b in (0, 1):
        mu = geometry.mu(b)
        for y in geometry.ds.dominant(b):
            collapse = max(collapse, float(np.abs(J @ (geometry.alphabet.unit(y) - mu)).max()))
    return {
        "complement": float(np.abs(G + J - np.eye(d)).max()),
        "idempotent": float(max(np.abs(G @ G - G).max(), np.abs(J @ J - J).max())),
        "symmetric": float(max(np.abs(G - G.T).max(), np.abs(J - J.T).max())),
        "collapse": collapse,
        "delta_formulas": float(np.abs(geometry.delta_shift - delta_by_components(geometry)).max()),
    }


__all__ = [
    "AlphabetSpec",
    "DominantStructure",
    "GroupingError",
    "Jump",
    "LevyAtom",
    "QuotientGeometry",
    "build_geometry",
    "components",
    "covariance_sigma",
    "delta_by_components",
    "geometry_residuals",
    "hybrid_limit_cf",
    "orthonormal_basis",
]
