"""Free nilpotent Lie algebras in a Hall basis, with exact structure constants.

Elements of the Lie algebra (and, through the exponential map, of the simply
connected group) are plain tuples of coordinates in the Hall basis.  Any
numeric type with ``+`` and ``*`` works; ``Fraction`` keeps everything exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from ._exact import rank as exact_rank
from ._exact import rref

__all__ = [
    "DEFAULT_DIMENSION_CAP",
    "MAX_BCH_STEP",
    "BasisSizeError",
    "HallWord",
    "HallBasis",
    "witt_dimension",
    "build_free_nilpotent",
    "bracket",
    "bch",
    "dilate",
    "adjoint_matrix",
    "adjoint",
    "coadjoint",
    "orbit_dimension",
    "basis_vector",
]

DEFAULT_DIMENSION_CAP = 1000
MAX_BCH_STEP = 6


class BasisSizeError(ValueError):
    """The requested free nilpotent algebra is larger than the configured cap."""

    def __init__(self, n, N, dimension, cap):
        super().__init__(
            f"free nilpotent algebra g({n},{N}) has dimension {dimension}, "
            f"above the cap {cap}"
        )
        self.dimension = dimension
        self.cap = cap


@dataclass(frozen=True)
class HallWord:
    """A bracketing tree; leaves are generator indices 0..n-1."""

    degree: int
    generator: int | None = None
    left: "HallWord | None" = None
    right: "HallWord | None" = None

    @classmethod
    def leaf(cls, i: int) -> "HallWord":
        return cls(1, generator=i)

    @classmethod
    def node(cls, u: "HallWord", v: "HallWord") -> "HallWord":
        return cls(u.degree + v.degree, left=u, right=v)

    @property
    def is_generator(self) -> bool:
        return self.generator is not None

    def leaves(self) -> tuple[int, ...]:
        if self.is_generator:
            return (self.generator,)
        return self.left.leaves() + self.right.leaves()

    def __str__(self) -> str:
        if self.is_generator:
            return f"X{self.generator + 1}"
        return f"[{self.left},{self.right}]"


def _mobius(k: int) -> int:
    result, p, m = 1, 2, k
    while p * p <= m:
        if m % p == 0:
            m //= p
            if m % p == 0:
                return 0
            result = -result
        p += 1
    return -result if m > 1 else result


def witt_dimension(n: int, d: int) -> int:
    """Dimension of the degree-d piece of the free Lie algebra on n letters."""
    total = sum(_mobius(e) * n ** (d // e) for e in range(1, d + 1) if d % e == 0)
    return total // d


@dataclass(frozen=True)
class HallBasis:
    n: int
    N: int
    words: tuple[HallWord, ...]
    degrees: tuple[int, ...]
    # (i, j) -> ((k, c_ij^k), ...), stored for both orders
    table: dict = field(repr=False, compare=False)

    @property
    def dim(self) -> int:
        return len(self.words)

    def graded_dimensions(self) -> tuple[int, ...]:
        return tuple(self.degrees.count(d) for d in range(1, self.N + 1))

    def index(self, word: HallWord) -> int:
        return self.words.index(word)

    def structure_constant(self, i: int, j: int, k: int) -> Fraction:
        for kk, c in self.table.get((i, j), ()):
            if kk == k:
                return c
        return Fraction(0)

    def structure_tensor(self) -> np.ndarray:
        """Float array ``C[i, j, k] = c_ij^k``."""
        C = np.zeros((self.dim, self.dim, self.dim))
        for (i, j), terms in self.table.items():
            for k, c in terms:
                C[i, j, k] = float(c)
        return C

    def labels(self) -> list[str]:
        return [str(w) for w in self.words]

    def zero(self):
        return (Fraction(0),) * self.dim


def _is_hall(u: HallWord, v: HallWord, order: dict) -> bool:
    # [u, v] with u < v, and if v = [v1, v2] then v1 <= u
    if order[u] >= order[v]:
        return False
    if v.is_generator:
        return True
    return order[v.left] <= order[u]


def _tensor(word: HallWord, cache: dict) -> dict:
    """Expansion of a bracketing tree in the free associative algebra."""
    if word in cache:
        return cache[word]
    if word.is_generator:
        out = {(word.generator,): 1}
    else:
        a = _tensor(word.left, cache)
        b = _tensor(word.right, cache)
        out = {}
        for wa, ca in a.items():
            for wb, cb in b.items():
                out[wa + wb] = out.get(wa + wb, 0) + ca * cb
                out[wb + wa] = out.get(wb + wa, 0) - ca * cb
        out = {w: c for w, c in out.items() if c}
    cache[word] = out
    return out


def build_free_nilpotent(n: int, N: int, cap: int = DEFAULT_DIMENSION_CAP) -> HallBasis:
    """Hall basis and structure constants of the free nilpotent algebra g(n, N).

    Words are ordered by degree, then by the order in which the Hall
    condition admits them.  Brackets of total degree above ``N`` vanish.
    """
    if n < 1 or N < 1:
        raise ValueError(f"need n >= 1 and N >= 1, got n={n}, N={N}")
    expected = sum(witt_dimension(n, d) for d in range(1, N + 1))
    if expected > cap:
        raise BasisSizeError(n, N, expected, cap)

    words = [HallWord.leaf(i) for i in range(n)]
    order = {w: i for i, w in enumerate(words)}
    by_degree = {1: list(words)}
    for d in range(2, N + 1):
        new = []
        for du in range(1, d):
            for u in by_degree[du]:
                for v in by_degree[d - du]:
                    if _is_hall(u, v, order):
                        new.append(HallWord.node(u, v))
        # admit in (left, right) order so that ordering is deterministic
        new.sort(key=lambda w: (order[w.left], order[w.right]))
        for w in new:
            order[w] = len(words)
            words.append(w)
        by_degree[d] = new

    cache: dict = {}
    # per-degree change of basis: word expansions -> Hall coordinates
    solvers = {}
    for d in range(1, N + 1):
        idx = [i for i, w in enumerate(words) if w.degree == d]
        if not idx:
            continue
        cols = sorted({t for i in idx for t in _tensor(words[i], cache)})
        col_of = {t: c for c, t in enumerate(cols)}
        rows = []
        for r, i in enumerate(idx):
            row = [0] * len(cols) + [0] * len(idx)
            for t, c in _tensor(words[i], cache).items():
                row[col_of[t]] = c
            row[len(cols) + r] = 1
            rows.append(row)
        R, piv = rref(rows, len(cols))
        if len(piv) != len(idx):
            raise AssertionError(f"Hall words of degree {d} are not independent")
        # R = T M with R[:, piv] = I; coefficients of q are T^t q[piv]
        T = [{s: v for s, v in enumerate(r[len(cols):]) if v} for r in R]
        solvers[d] = (idx, col_of, piv, cols, T)

    table = {}
    dim = len(words)
    degrees = [w.degree for w in words]
    for i in range(dim):
        for j in range(i + 1, dim):
            d = degrees[i] + degrees[j]
            if d > N:
                continue
            idx, col_of, piv, cols, T = solvers[d]
            q = {}
            a = _tensor(words[i], cache)
            b = _tensor(words[j], cache)
            for wa, ca in a.items():
                for wb, cb in b.items():
                    q[wa + wb] = q.get(wa + wb, 0) + ca * cb
                    q[wb + wa] = q.get(wb + wa, 0) - ca * cb
            coeffs = [0] * len(idx)
            for r, p in enumerate(piv):
                qr = q.get(cols[p], 0)
                if qr:
                    for s, v in T[r].items():
                        coeffs[s] += v * qr
            # exact reconstruction check
            recon = {}
            for s, c in enumerate(coeffs):
                if c:
                    for t, v in _tensor(words[idx[s]], cache).items():
                        recon[t] = recon.get(t, 0) + c * v
            if {t: v for t, v in recon.items() if v} != {t: v for t, v in q.items() if v}:
                raise AssertionError(f"bracket of words {i}, {j} left the Hall span")
            terms = tuple((idx[s], c) for s, c in enumerate(coeffs) if c)
            if terms:
                table[(i, j)] = terms
                table[(j, i)] = tuple((k, -c) for k, c in terms)

    basis = HallBasis(n=n, N=N, words=tuple(words), degrees=tuple(degrees), table=table)
    if basis.dim != expected:
        raise AssertionError(f"Hall construction gave {basis.dim}, Witt formula {expected}")
    return basis


def _check(B: HallBasis, *vs: Sequence) -> None:
    for v in vs:
        if len(v) != B.dim:
            raise ValueError(f"element has {len(v)} coordinates, algebra has dimension {B.dim}")


def basis_vector(B: HallBasis, k: int, scale=1):
    v = [Fraction(0)] * B.dim
    v[k] = Fraction(scale) if isinstance(scale, int) else scale
    return tuple(v)


def bracket(B: HallBasis, a: Sequence, b: Sequence) -> tuple:
    """Lie bracket, bilinear extension of the structure constants."""
    _check(B, a, b)
    out = [0] * B.dim
    table = B.table
    for i, ai in enumerate(a):
        if not ai:
            continue
        for j, bj in enumerate(b):
            if i == j or not bj:
                continue
            terms = table.get((i, j))
            if terms is None:
                continue
            for k, c in terms:
                out[k] = out[k] + c * ai * bj
    return tuple(out)


def _add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _scale(c, a):
    return tuple(c * x for x in a)


@lru_cache(maxsize=None)
def dynkin_coefficients(N: int) -> tuple[tuple[tuple[int, ...], Fraction], ...]:
    """Dynkin series of log(e^X e^Y) up to degree N, grouped by word.

    Each entry ``(w, c)`` contributes ``c`` times the right-nested bracket
    ``[w0, [w1, [..., w_last]]]`` with letters 0 = X, 1 = Y.
    """
    if N > MAX_BCH_STEP:
        raise ValueError(f"BCH coefficients are tabulated up to step {MAX_BCH_STEP}, got {N}")
    acc: dict[tuple[int, ...], Fraction] = {}

    def rec(pairs, total):
        if pairs:
            k = len(pairs)
            denom = total
            for r, s in pairs:
                denom *= math.factorial(r) * math.factorial(s)
            w = tuple(x for r, s in pairs for x in (0,) * r + (1,) * s)
            acc[w] = acc.get(w, Fraction(0)) + Fraction((-1) ** (k - 1), k * denom)
        for m in range(1, N - total + 1):
            for r in range(m + 1):
                rec(pairs + [(r, m - r)], total + m)

    rec([], 0)
    out = []
    for w, c in sorted(acc.items(), key=lambda kv: (len(kv[0]), kv[0])):
        if c == 0:
            continue
        if len(w) >= 2 and w[-1] == w[-2]:
            continue  # innermost bracket [z, z] vanishes
        out.append((w, c))
    return tuple(out)


def bch(B: HallBasis, a: Sequence, b: Sequence) -> tuple:
    """Group law in exponential coordinates: log(exp(a) exp(b)), truncated at step N."""
    _check(B, a, b)
    letters = (tuple(a), tuple(b))
    memo: dict = {}

    def nested(w):
        if w in memo:
            return memo[w]
        if len(w) == 1:
            val = letters[w[0]]
        else:
            val = bracket(B, letters[w[0]], nested(w[1:]))
        memo[w] = val
        return val

    out = [0] * B.dim
    for w, c in dynkin_coefficients(B.N):
        v = nested(w)
        for k, vk in enumerate(v):
            if vk:
                out[k] = out[k] + c * vk
    return tuple(out)


def dilate(B: HallBasis, t, a: Sequence) -> tuple:
    """Graded dilation: the coordinate on a degree-d word is multiplied by t**d."""
    if not t > 0:
        raise ValueError(f"dilation parameter must be positive, got {t}")
    _check(B, a)
    return tuple(x * t**d for x, d in zip(a, B.degrees))


def adjoint_matrix(B: HallBasis, g: Sequence) -> list[list]:
    """Matrix of Ad_g = exp(ad_g), a finite sum since ad_g is nilpotent."""
    _check(B, g)
    cols = []
    for j in range(B.dim):
        term = basis_vector(B, j)
        col = list(term)
        for k in range(1, B.N):
            term = bracket(B, g, term)
            if not any(term):
                break
            col = [c + Fraction(1, math.factorial(k)) * x for c, x in zip(col, term)]
        cols.append(col)
    return [[cols[j][i] for j in range(B.dim)] for i in range(B.dim)]


def adjoint(B: HallBasis, g: Sequence, v: Sequence) -> tuple:
    _check(B, g, v)
    return bch(B, bch(B, g, v), tuple(-x for x in g))


def coadjoint(B: HallBasis, g: Sequence, xi: Sequence) -> tuple:
    """(g . xi)(v) = xi(Ad_{g^-1} v)."""
    _check(B, g, xi)
    A = adjoint_matrix(B, tuple(-x for x in g))
    return tuple(sum(xi[k] * A[k][j] for k in range(B.dim)) for j in range(B.dim))


def orbit_dimension(B: HallBasis, xi: Sequence) -> int:
    """Dimension of the coadjoint orbit through xi (rank of v -> xi o ad_v)."""
    _check(B, xi)
    rows = []
    for i in range(B.dim):
        ei = basis_vector(B, i)
        row = []
        for j in range(B.dim):
            br = bracket(B, ei, basis_vector(B, j))
            row.append(sum(x * y for x, y in zip(xi, br)))
        rows.append(row)
    if all(isinstance(x, (int, Fraction)) for r in rows for x in r):
        return exact_rank(rows)
    return int(np.linalg.matrix_rank(np.array(rows, dtype=float), tol=1e-10))
