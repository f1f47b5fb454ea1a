"""Set-level limit groupoid: pair groupoids for t > 0, coset spaces at t = 0.

At t = 0 an arrow over x is a left coset gH of a closed subgroup H = exp(h).
Its source is (H, x) and its range is (gHg^-1, x).  Cosets are stored by a
canonical representative computed from a weak Malcev chain

    W_i = h + F^i,  F^i = span of basis words of degree >= i,

so every coset has exactly one representative and equality is exact for
rational data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
import scipy.optimize

from ._exact import is_exact, rref, solve_in_span
from .frame_model import Frame
from .grassmann import Subspace, grassmann_distance
from .lie_core import HallBasis, adjoint_matrix, bch, dilate
from .tangent_cones import ApproachPath, dilated_kernel, is_subalgebra

__all__ = [
    "GroupoidElement",
    "NotComposableError",
    "canonical_representative",
    "right_canonical_representative",
    "pair_arrow",
    "coset_arrow",
    "groupoid_compose",
    "groupoid_inverse",
    "groupoid_source",
    "groupoid_range",
    "groupoid_unit",
    "groupoid_convergence_check",
]


class NotComposableError(ValueError):
    pass


@dataclass(frozen=True)
class GroupoidElement:
    """(x, y, t) with t > 0, or (g H, x) at t = 0 with g a canonical representative."""

    t: float
    x: tuple
    y: tuple | None = None
    g: tuple | None = None
    H: Subspace | None = None
    basis: HallBasis | None = None

    @property
    def is_limit(self) -> bool:
        return self.t == 0

    def key(self):
        if not self.is_limit:
            return ("pair", self.x, self.y, self.t)
        return ("coset", self.x, self.g, _subspace_key(self.H))

    def __eq__(self, other):
        return isinstance(other, GroupoidElement) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())


def _subspace_key(S: Subspace):
    if S.exact is not None:
        return S.exact
    return tuple(np.round(S.projector(), 12).ravel())


# -- canonical cosets ---------------------------------------------------------------


def _unit(B: HallBasis, k: int, exact: bool):
    z = [Fraction(0) if exact else 0.0] * B.dim
    z[k] = Fraction(1) if exact else 1.0
    return z


def _chain(B: HallBasis, H: Subspace, exact: bool):
    if exact:
        return _chain_cached(B, H.exact)
    return _build_chain(B, [list(r) for r in H.basis], False)


@lru_cache(maxsize=4096)
def _chain_cached(B: HallBasis, rows: tuple):
    return _build_chain(B, [list(r) for r in rows], True)


def _build_chain(B: HallBasis, hrows: list, exact: bool):
    """Per degree i: (C_i unit indices, spanning rows of W_{i+1})."""
    out = []
    for i in range(1, B.N + 1):
        below = hrows + [_unit(B, k, exact) for k, d in enumerate(B.degrees) if d > i]
        chosen: list[int] = []
        cur = list(below)
        base_rank = _rank(cur, B.dim, exact)
        for k, d in enumerate(B.degrees):
            if d != i:
                continue
            trial = cur + [_unit(B, k, exact)]
            r = _rank(trial, B.dim, exact)
            if r > base_rank:
                cur, base_rank = trial, r
                chosen.append(k)
        out.append((chosen, below, _extractor(B, chosen, below) if exact and chosen else None))
    return out


def _extractor(B: HallBasis, chosen: list, below: list):
    """Exact linear map returning the coordinates on ``chosen`` of an element of W_i.

    W_i is the direct sum of the chosen unit vectors and span(below).  With
    M = [chosen units; independent rows of below], the coordinates a of t
    solve a M = t, which is decided by the pivot columns of M alone.
    """
    R, _ = rref(below, B.dim) if below else ([], [])
    M = [_unit(B, k, True) for k in chosen] + R
    _, piv = rref(M, B.dim)
    r = len(piv)
    aug = [[M[i][c] for i in range(r)] + [Fraction(int(i == j)) for j in range(r)] for i, c in enumerate(piv)]
    inv = [row[r:] for row in rref(aug, 2 * r)[0]]  # (M_p^T)^-1
    return piv, [inv[j] for j in range(len(chosen))]


def _rank(rows, d, exact):
    if not rows:
        return 0
    if exact:
        return len(rref(rows, d)[1])
    s = np.linalg.svd(np.array(rows, dtype=float), compute_uv=False)
    return int(np.sum(s > 1e-10 * max(s[0], 1.0)))


def _coefficients(rows, target, exact):
    if exact:
        c = solve_in_span(rows, list(target))
        if c is None:
            raise ValueError("element does not lie in the expected subalgebra of the chain")
        return c
    A = np.array(rows, dtype=float).T
    c, *_ = np.linalg.lstsq(A, np.array(target, dtype=float), rcond=None)
    return list(c)


def canonical_representative(B: HallBasis, g: Sequence, H: Subspace) -> tuple:
    """Unique representative of the left coset gH.

    Factors g = exp(c_1) ... exp(c_N) h with c_i in the span of chosen
    degree-i basis words and h in H, and returns log(exp(c_1) ... exp(c_N)).
    """
    exact = H.exact is not None and all(is_exact(v) for v in g)
    if H.ambient != B.dim or len(g) != B.dim:
        raise ValueError("element / subspace do not match the algebra dimension")
    if H.dim == 0:
        return tuple(g)
    cur = tuple(Fraction(v) for v in g) if exact else tuple(float(v) for v in g)
    rep = tuple(0 * v for v in cur)
    for chosen, below, ext in _chain(B, H, exact):
        if not chosen:
            continue
        if ext is not None:
            piv, X = ext
            tp = [cur[c] for c in piv]
            coef = [sum(x * t for x, t in zip(row, tp)) for row in X]
        else:
            coef = _coefficients([_unit(B, k, exact) for k in chosen] + below, cur, exact)
        u = [0 * v for v in cur]
        for c, k in zip(coef[: len(chosen)], chosen):
            u[k] = c
        u = tuple(u)
        rep = bch(B, rep, u)
        cur = bch(B, tuple(-v for v in u), cur)
    return rep


def right_canonical_representative(B: HallBasis, g: Sequence, H: Subspace) -> tuple:
    """Representative of the right coset Hg: the inverse of the representative of g^-1 H."""
    r = canonical_representative(B, tuple(-v for v in g), H)
    return tuple(-v for v in r)


# -- arrows ---------------------------------------------------------------------------


def pair_arrow(x: Sequence, y: Sequence, t: float) -> GroupoidElement:
    if not t > 0:
        raise ValueError(f"pair arrows need t > 0, got {t}")
    return GroupoidElement(t=t, x=tuple(x), y=tuple(y))


def coset_arrow(B: HallBasis, g: Sequence, H: Subspace, x: Sequence, check: bool = True) -> GroupoidElement:
    if check and not is_subalgebra(B, H):
        raise ValueError(f"{H} is not a subalgebra")
    return GroupoidElement(t=0, x=tuple(x), g=canonical_representative(B, g, H), H=H, basis=B)


def _conjugate(B: HallBasis, g, H: Subspace) -> Subspace:
    if H.exact is not None and all(is_exact(v) for v in g):
        return _conjugate_exact(B, tuple(g), H.exact)
    return H.map(adjoint_matrix(B, g))


@lru_cache(maxsize=65536)
def _conjugate_exact(B: HallBasis, g: tuple, rows: tuple) -> Subspace:
    return Subspace.from_rows([list(r) for r in rows], B.dim).map(adjoint_matrix(B, g))


def groupoid_source(a: GroupoidElement):
    if not a.is_limit:
        return (a.y, a.t)
    return (_subspace_key(a.H), a.x, 0)


def groupoid_range(a: GroupoidElement):
    if not a.is_limit:
        return (a.x, a.t)
    return (_subspace_key(_conjugate(a.basis, a.g, a.H)), a.x, 0)


def groupoid_unit(a: GroupoidElement, side: str = "range") -> GroupoidElement:
    """Unit arrow at the source or range object of a."""
    if not a.is_limit:
        p = a.x if side == "range" else a.y
        return pair_arrow(p, p, a.t)
    K = a.H if side == "source" else _conjugate(a.basis, a.g, a.H)
    return GroupoidElement(t=0, x=a.x, g=tuple(0 * v for v in a.g), H=K, basis=a.basis)


def groupoid_compose(a: GroupoidElement, b: GroupoidElement) -> GroupoidElement:
    """a . b, defined when source(a) = range(b)."""
    if a.is_limit != b.is_limit:
        raise NotComposableError("arrows live in different strata")
    if groupoid_source(a) != groupoid_range(b):
        raise NotComposableError("source of the left arrow differs from range of the right arrow")
    if not a.is_limit:
        return pair_arrow(a.x, b.y, a.t)
    B = a.basis
    return GroupoidElement(t=0, x=a.x, g=canonical_representative(B, bch(B, a.g, b.g), b.H), H=b.H, basis=B)


def groupoid_inverse(a: GroupoidElement) -> GroupoidElement:
    if not a.is_limit:
        return pair_arrow(a.y, a.x, a.t)
    B = a.basis
    K = _conjugate(B, a.g, a.H)
    return GroupoidElement(t=0, x=a.x, g=canonical_representative(B, tuple(-v for v in a.g), K), H=K, basis=B)


# -- convergence criterion ------------------------------------------------------------


def groupoid_convergence_check(
    F: Frame,
    v: Sequence,
    H: Subspace,
    x: Sequence,
    path: ApproachPath,
    samples: int = 6,
    start: int = 2,
    steps: int = 64,
) -> list[dict]:
    """Residuals of (y_n, x_n, t_n) -> (class of exp(v), x, 0).

    y_n is the time-one flow of anchor(alpha_{t_n} v) from x_n.  From
    (x_n, y_n, t_n) an element v_n is recovered in the orthogonal
    complement of the dilated kernel at (x_n, t_n); ``coset_gap`` compares
    the classes of v_n and v modulo H.  Flows compose as a right action,
    so the class of v is the right coset H exp(v); for central H this is
    the same as exp(v) H.
    """
    from .cc_metric import flow_field

    B = F.basis
    vv = np.array([float(c) for c in v])
    target = np.array(right_canonical_representative(B, tuple(vv), H), dtype=float)
    xs = np.array([float(c) for c in x])
    rows = []
    for j in range(start, start + samples):
        xn, tn = path.at(j)
        yn, _ = flow_field(F, xn, dilate(B, tn, tuple(vv)), steps=steps)
        K = dilated_kernel(F, tuple(xn), tn)
        vn = _recover(F, xn, yn, tn, K, vv, steps)
        rep = np.array(right_canonical_representative(B, tuple(vn), H), dtype=float)
        rows.append(
            {
                "s": path.s0 / 2.0**j,
                "t": tn,
                "x_gap": float(np.linalg.norm(xn - xs)),
                "kernel_gap": grassmann_distance(K, H) if K.dim == H.dim else math.nan,
                "coset_gap": float(np.linalg.norm(rep - target)),
                "y": [float(c) for c in yn],
            }
        )
    return rows


def _recover(F: Frame, xn, yn, tn, K: Subspace, guess, steps) -> np.ndarray:
    """u in K^perp with flow(anchor(alpha_t u)) from xn ending at yn; starts at the projection of guess."""
    from .cc_metric import flow_field

    B = F.basis
    Q = K.basis
    u0 = guess - (Q.T @ (Q @ guess) if K.dim else 0.0)
    # orthonormal basis of K^perp
    _, _, vt = np.linalg.svd(np.eye(B.dim) - (Q.T @ Q if K.dim else 0.0))
    comp = vt[: B.dim - K.dim]
    c0 = comp @ u0

    def resid(c):
        u = comp.T @ c
        y, _ = flow_field(F, xn, dilate(B, tn, tuple(u)), steps=steps)
        return (y - yn) / tn

    out = scipy.optimize.least_squares(resid, c0, xtol=1e-14, ftol=1e-14, gtol=1e-14)
    return comp.T @ out.x
