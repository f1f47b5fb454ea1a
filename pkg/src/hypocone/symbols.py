"""Operator polynomials in the frame fields and their principal symbols.

An operator is presented as D = P(X_1, ..., X_n) with P a noncommutative
polynomial whose coefficients are (trigonometric) polynomials on the chart.
Its symbol at x in a representation pi substitutes dpi of the generators
into the top-degree part of P with coefficients frozen at x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from ._exact import GaussianRational, is_exact
from .frame_model import Frame
from .lie_core import HallBasis
from .poly import Poly

__all__ = [
    "NCPoly",
    "Character",
    "Schrodinger",
    "Custom",
    "SymbolOperator",
    "UnclassifiedStratum",
    "hormander_degree",
    "top_part_at",
    "dpi",
    "symbol",
    "injectivity_margin",
    "check_representation",
    "heisenberg_catalog",
    "check_max_hypoelliptic",
    "presentation_gap",
    "grushin_operator",
]

NEG_INF = float("-inf")


class UnclassifiedStratum(LookupError):
    """No representation family is known for a discovered cone stratum."""


# -- operator polynomials ---------------------------------------------------------


class NCPoly:
    """sum_k c_k(x) X_{w_k}, words are tuples of 0-based generator indices."""

    __slots__ = ("m", "n", "terms")

    def __init__(self, m: int, n: int, terms: Iterable[tuple[Poly, Sequence[int]]] = ()):
        self.m, self.n = m, n
        acc: dict[tuple, Poly] = {}
        for c, w in terms:
            w = tuple(int(i) for i in w)
            if any(i < 0 or i >= n for i in w):
                raise ValueError(f"word {w} uses a generator outside 0..{n - 1}")
            if not isinstance(c, Poly):
                c = Poly.constant(m, c)
            if c.m != m:
                raise ValueError("coefficient lives on a different chart")
            acc[w] = acc[w] + c if w in acc else c
        self.terms = {w: c for w, c in sorted(acc.items(), key=lambda kv: (len(kv[0]), kv[0])) if c}

    @classmethod
    def word(cls, m: int, n: int, w: Sequence[int], c=1) -> "NCPoly":
        return cls(m, n, [(c, w)])

    def __add__(self, other: "NCPoly") -> "NCPoly":
        self._same(other)
        return NCPoly(self.m, self.n, list(self.items()) + list(other.items()))

    def __neg__(self):
        return NCPoly(self.m, self.n, [(-c, w) for c, w in self.items()])

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        """Product as presentations: coefficients commute past the generators (frozen-coefficient product)."""
        if isinstance(other, NCPoly):
            self._same(other)
            return NCPoly(self.m, self.n, [(a * b, u + v) for a, u in self.items() for b, v in other.items()])
        return NCPoly(self.m, self.n, [(c * other, w) for c, w in self.items()])

    __rmul__ = __mul__

    def _same(self, other):
        if (self.m, self.n) != (other.m, other.n):
            raise ValueError("operator polynomials live on different charts / generator sets")

    def items(self):
        return ((c, w) for w, c in self.terms.items())

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        return isinstance(other, NCPoly) and (self.m, self.n, self.terms) == (other.m, other.n, other.terms)

    def to_json(self) -> dict:
        return {"terms": [{"coeff": c.to_json(), "word": [i + 1 for i in w]} for c, w in self.items()]}

    @classmethod
    def from_json(cls, m: int, n: int, data: dict) -> "NCPoly":
        terms = []
        for t in data["terms"]:
            word = [int(i) - 1 for i in t["word"]]
            terms.append((Poly.from_json(m, t["coeff"]), word))
        return cls(m, n, terms)

    def pretty(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for c, w in self.items():
            ws = "".join(f"X{i + 1}" for i in w) or "1"
            parts.append(f"({c.pretty()})*{ws}")
        return " + ".join(parts)

    def __repr__(self):
        return f"NCPoly({self.pretty()})"


def hormander_degree(P: NCPoly) -> float:
    """Declared degree: the longest word.  -inf for the zero polynomial."""
    if not P.terms:
        return NEG_INF
    return max(len(w) for w in P.terms)


def top_part_at(P: NCPoly, x: Sequence) -> NCPoly:
    """Terms of maximal word length with coefficients evaluated at x."""
    k = hormander_degree(P)
    return NCPoly(P.m, P.n, [(Poly.constant(P.m, c.evaluate(x)), w) for c, w in P.items() if len(w) == k])


def grushin_operator(ell: Poly | int | Fraction, m: int = 2) -> NCPoly:
    """X1^2 + X2^2 + i*ell*(X1 X2 - X2 X1)."""
    ell = ell if isinstance(ell, Poly) else Poly.constant(m, ell)
    i_ell = ell * GaussianRational(0, 1)
    return NCPoly(m, 2, [(1, (0, 0)), (1, (1, 1)), (i_ell, (0, 1)), (-i_ell, (1, 0))])


# -- representations ------------------------------------------------------------


@dataclass(frozen=True)
class Character:
    """One-dimensional representation: generator j -> i*mu_j, brackets -> 0."""

    mu: tuple

    def label(self) -> str:
        return "character(" + ",".join(_fmt(v) for v in self.mu) + ")"


@dataclass(frozen=True)
class Schrodinger:
    """Truncated Schrodinger representation of the Heisenberg algebra on K Hermite functions.

    X1 -> eps*sqrt(s) d/dt, X2 -> i*sqrt(s) t, [X1, X2] -> i*eps*s.
    """

    eps: int
    K: int = 64
    scale: float = 1.0

    def __post_init__(self):
        if self.eps not in (1, -1):
            raise ValueError(f"eps must be +1 or -1, got {self.eps}")
        if self.K < 2:
            raise ValueError("truncation dimension must be at least 2")
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    def label(self) -> str:
        s = "" if self.scale == 1 else f",scale={self.scale:g}"
        return f"schrodinger(eps={self.eps:+d},K={self.K}{s})"


@dataclass(frozen=True)
class Custom:
    """User-supplied images of every Hall basis element (K x K complex matrices)."""

    images: tuple
    tol: float = 1e-8
    name: str = "custom"

    def __post_init__(self):
        mats = tuple(np.asarray(M, dtype=complex) for M in self.images)
        if not mats:
            raise ValueError("a custom representation needs at least one image")
        K = mats[0].shape
        if any(M.shape != K or M.ndim != 2 or K[0] != K[1] for M in mats):
            raise ValueError("custom images must be square matrices of one size")
        if not all(np.all(np.isfinite(M)) for M in mats):
            raise ValueError("custom images must have finite entries")
        object.__setattr__(self, "images", mats)

    def label(self) -> str:
        return self.name


def _fmt(v) -> str:
    return str(v) if is_exact(v) else f"{float(v):.6g}"


@dataclass
class SymbolOperator:
    """A scalar (characters) or a K x K matrix."""

    value: object
    rep: str = ""

    @property
    def is_scalar(self) -> bool:
        return not isinstance(self.value, np.ndarray)

    def spectrum(self) -> np.ndarray:
        if self.is_scalar:
            return np.array([complex(self.value)])
        return np.linalg.eigvals(self.value)


def _ladder(K: int) -> np.ndarray:
    """Lowering operator a = (t + d/dt)/sqrt(2) on the first K Hermite functions."""
    return np.diag(np.sqrt(np.arange(1, K, dtype=float)), 1)


def _schrodinger_images(rep: Schrodinger) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    a = _ladder(rep.K)
    t = (a + a.T) / math.sqrt(2)
    d = (a - a.T) / math.sqrt(2)
    r = math.sqrt(rep.scale)
    return rep.eps * r * d.astype(complex), 1j * r * t, 1j * rep.eps * rep.scale * np.eye(rep.K)


def _is_heisenberg(B: HallBasis) -> bool:
    return B.n == 2 and B.N == 2


def dpi(rep, B: HallBasis, w: int):
    """Image of the Hall basis element ``w``."""
    if not 0 <= w < B.dim:
        raise IndexError(f"basis index {w} outside 0..{B.dim - 1}")
    if isinstance(rep, Character):
        if len(rep.mu) != B.n:
            raise ValueError(f"character has {len(rep.mu)} parameters, algebra has {B.n} generators")
        if B.degrees[w] > 1:
            return 0
        mu = rep.mu[B.words[w].generator]
        return GaussianRational(0, mu) if is_exact(mu) else 1j * float(mu)
    if isinstance(rep, Schrodinger):
        if not _is_heisenberg(B):
            raise ValueError("the Schrodinger representation is defined for the Heisenberg algebra g(2,2)")
        return _schrodinger_images(rep)[w]
    if isinstance(rep, Custom):
        if len(rep.images) != B.dim:
            raise ValueError(f"custom representation has {len(rep.images)} images, algebra has {B.dim}")
        return rep.images[w]
    raise TypeError(f"unknown representation type {type(rep).__name__}")


def check_representation(rep, B: HallBasis, interior_fraction: float = 0.5) -> float:
    """max |[dpi(b_i), dpi(b_j)] - sum_k c_ij^k dpi(b_k)| on the interior block.

    For Custom representations a residual above the declared tolerance
    raises ValueError.
    """
    if isinstance(rep, Character):
        return 0.0
    mats = [np.asarray(dpi(rep, B, w), dtype=complex) for w in range(B.dim)]
    K = mats[0].shape[0]
    k = K if isinstance(rep, Custom) else max(1, int(interior_fraction * K))
    worst = 0.0
    for i in range(B.dim):
        for j in range(i + 1, B.dim):
            lhs = mats[i] @ mats[j] - mats[j] @ mats[i]
            rhs = sum((float(c) * mats[kk] for kk, c in B.table.get((i, j), ())), np.zeros_like(lhs))
            worst = max(worst, float(np.max(np.abs((lhs - rhs)[:k, :k]))))
    if isinstance(rep, Custom) and worst > rep.tol:
        raise ValueError(f"custom images violate the bracket relations (residual {worst:.3g} > {rep.tol:g})")
    return worst


def symbol(P: NCPoly, x: Sequence, rep, B: HallBasis) -> SymbolOperator:
    """Top part of P at x with generator X_j replaced by dpi(X_j), multiplied in word order."""
    if P.n != B.n:
        raise ValueError(f"operator uses {P.n} generators, algebra has {B.n}")
    if isinstance(rep, Custom):
        check_representation(rep, B)
    gens = [dpi(rep, B, B.index(_generator_word(B, j))) for j in range(B.n)]
    top = top_part_at(P, x)
    if isinstance(rep, Character):
        total = 0
        for c, w in top.items():
            val = c.evaluate((0,) * P.m)
            for j in w:
                val = val * gens[j]
            total = total + val
        if isinstance(total, GaussianRational):
            total = total.simplify()
        return SymbolOperator(total, rep.label())
    K = gens[0].shape[0]
    out = np.zeros((K, K), dtype=complex)
    for c, w in top.items():
        M = complex(c.evaluate((0,) * P.m)) * np.eye(K, dtype=complex)
        for j in w:
            M = M @ gens[j]
        out += M
    return SymbolOperator(out, rep.label())


def _generator_word(B: HallBasis, j: int):
    return next(w for w in B.words if w.is_generator and w.generator == j)


def injectivity_margin(S: SymbolOperator, interior_fraction: float = 0.5) -> float:
    """|value| for scalars; smallest singular value of the interior block for matrices."""
    if S.is_scalar:
        return abs(complex(S.value))
    M = S.value
    k = max(1, int(interior_fraction * M.shape[0]))
    return float(np.linalg.svd(M[:k, :k], compute_uv=False)[-1])


# -- maximal hypoellipticity -------------------------------------------------------


def heisenberg_catalog(B: HallBasis, members, K: int = 64, circle: int = 16) -> list:
    """Unit-scale representations whose functionals meet the annihilators of the cone members.

    Characters: the unit circle of h-perp intersected with [g, g]-perp.
    Schrodinger pi_{+1}, pi_{-1}: whenever some h-perp is not inside [g, g]-perp.
    """
    if not _is_heisenberg(B):
        raise UnclassifiedStratum("the built-in catalog covers g(2,2) only; pass rep_catalog")
    reps: list = []
    seen = set()
    need_schrodinger = False
    for mb in members:
        S = getattr(mb, "subspace", mb)
        Q = S.basis
        if S.dim == 0 or abs(_perp_component(Q, 2)) > 1e-9:
            need_schrodinger = True
        # functionals (a, b, 0) killing S
        A = Q[:, :2] if S.dim else np.zeros((0, 2))
        _, s, vt = np.linalg.svd(A) if A.size else (None, np.array([]), np.eye(2))
        r = int(np.sum(s > 1e-10))
        null = vt[r:]
        if null.shape[0] == 2:
            angles = [2 * math.pi * k / circle for k in range(circle)]
            pts = [(math.cos(a), math.sin(a)) for a in angles]
        elif null.shape[0] == 1:
            v = null[0] / np.linalg.norm(null[0])
            pts = [tuple(v), tuple(-v)]
        else:
            pts = []
        for p in pts:
            key = tuple(round(c, 12) for c in p)
            if key not in seen:
                seen.add(key)
                reps.append(Character(tuple(_clean(c) for c in p)))
    if need_schrodinger:
        reps += [Schrodinger(1, K), Schrodinger(-1, K)]
    return reps


def _perp_component(Q: np.ndarray, k: int) -> float:
    """Largest dimension of h-perp not inside the annihilator of e_k; nonzero iff e_k is not in h."""
    if Q.shape[0] == 0:
        return 1.0
    e = np.zeros(Q.shape[1])
    e[k] = 1.0
    return float(np.linalg.norm(e - Q.T @ (Q @ e)))


def _clean(c: float):
    for v in (0, 1, -1):
        if abs(c - v) < 1e-14:
            return Fraction(v)
    return c


@dataclass
class PointVerdict:
    point: tuple
    margin: float
    worst: str
    hypoelliptic: bool
    strata: int


@dataclass
class HypoReport:
    points: list[PointVerdict]
    tol: float

    @property
    def hypoelliptic(self) -> bool:
        return all(p.hypoelliptic for p in self.points)

    def failing(self) -> list[PointVerdict]:
        return [p for p in self.points if not p.hypoelliptic]


def check_max_hypoelliptic(
    F: Frame,
    P: NCPoly,
    grid: Sequence[Sequence],
    rep_catalog: Callable | Sequence | None = None,
    tol: float = 1e-6,
    sampling=None,
    K: int = 64,
    interior_fraction: float = 0.5,
) -> HypoReport:
    """Per-point verdict: min injectivity margin over the catalog exceeds ``tol``.

    ``rep_catalog`` is a callable (x, cone_members) -> representations, a
    fixed list used at every point, or None for the built-in g(2,2) catalog.
    """
    from .tangent_cones import cached_cone

    B = F.basis
    verdicts = []
    for x in grid:
        cone = cached_cone(F, tuple(float(v) for v in x), sampling)
        if rep_catalog is None:
            reps = heisenberg_catalog(B, cone.members, K)
        elif callable(rep_catalog):
            reps = list(rep_catalog(tuple(x), cone.members))
        else:
            reps = list(rep_catalog)
        if not reps:
            raise UnclassifiedStratum(f"no representation covers the cone strata at {tuple(x)}")
        worst_m, worst_r = math.inf, ""
        for rep in reps:
            mgn = injectivity_margin(symbol(P, x, rep, B), interior_fraction)
            if mgn < worst_m:
                worst_m, worst_r = mgn, rep.label()
        verdicts.append(PointVerdict(tuple(x), worst_m, worst_r, worst_m > tol, len(cone.members)))
    return HypoReport(verdicts, tol)


def presentation_gap(P: NCPoly, Q: NCPoly, x: Sequence, reps: Sequence, B: HallBasis,
                     interior_fraction: float = 0.5) -> float:
    """max over reps of |symbol(P) - symbol(Q)| on the interior block."""
    worst = 0.0
    for rep in reps:
        a, b = symbol(P, x, rep, B), symbol(Q, x, rep, B)
        if a.is_scalar:
            worst = max(worst, abs(complex(a.value) - complex(b.value)))
        else:
            k = max(1, int(interior_fraction * a.value.shape[0]))
            worst = max(worst, float(np.max(np.abs((a.value - b.value)[:k, :k]))))
    return worst
