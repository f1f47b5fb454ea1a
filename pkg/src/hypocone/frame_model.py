"""Polynomial frames on a chart, the anchor map and its pointwise kernels.

A :class:`Frame` bundles n polynomial (or trigonometric-polynomial) vector
fields on an m-dimensional chart together with the Hall basis of the free
nilpotent algebra they are compared against.  The anchor sends a Hall word
to the corresponding iterated bracket of the fields; it is linear but is
not a Lie algebra morphism in general.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg

from ._exact import is_exact, nullspace
from ._exact import rank as exact_rank
from .grassmann import Subspace
from .lie_core import HallBasis, bch, build_free_nilpotent
from .poly import Poly, PolyVF

__all__ = [
    "RANK_RTOL",
    "ChartError",
    "SurjectivityError",
    "Frame",
    "HormanderResult",
    "make_frame",
    "vf_bracket",
    "anchor_matrix",
    "anchor_at",
    "check_hormander",
    "kernel_at",
    "left_invariant_frame",
    "symbolic_bch",
    "grushin_frame",
    "torus_grushin_frame",
    "elliptic_frame",
]

RANK_RTOL = 1e-10


class ChartError(ValueError):
    """A point is not a valid point of the chart."""


class SurjectivityError(ValueError):
    """The evaluated anchor is not onto the tangent space at a point."""


def vf_bracket(X: PolyVF, Y: PolyVF) -> PolyVF:
    """[X, Y]^k = sum_j X^j d_j Y^k - Y^j d_j X^k."""
    if X.m != Y.m:
        raise ValueError(f"chart dimension mismatch: {X.m} vs {Y.m}")
    return PolyVF(X.apply(yk) - Y.apply(xk) for xk, yk in zip(X.components, Y.components))


@dataclass(frozen=True)
class Frame:
    m: int
    fields: tuple[PolyVF, ...]
    step: int
    periodic: tuple[bool, ...]
    basis: HallBasis = field(repr=False)
    anchors: tuple[PolyVF, ...] = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.fields)

    @property
    def has_trig(self) -> bool:
        return any(f.has_trig for f in self.fields)

    @cached_property
    def numeric(self) -> "NumericFrame":
        return NumericFrame(self)

    def check_point(self, x: Sequence) -> tuple:
        if len(x) != self.m:
            raise ChartError(f"point {tuple(x)} has {len(x)} coordinates, chart has {self.m}")
        for v in x:
            if not is_exact(v) and not math.isfinite(float(v)):
                raise ChartError(f"point {tuple(x)} has non-finite coordinates")
        return tuple(x)

    def anchored(self, word_index: int) -> PolyVF:
        return self.anchors[word_index]

    def to_json(self) -> dict:
        return {
            "dimension": self.m,
            "periodic": list(self.periodic),
            "step": self.step,
            "fields": [f.to_json() for f in self.fields],
        }


def make_frame(fields: Sequence[PolyVF], step: int, periodic: Sequence[bool] | None = None) -> Frame:
    """Build a frame and its anchor table ``Hall word -> iterated bracket``."""
    fields = tuple(fields)
    if not fields:
        raise ValueError("a frame needs at least one vector field")
    m = fields[0].m
    if any(f.m != m for f in fields):
        raise ValueError("all fields must live on the same chart")
    periodic = tuple(bool(p) for p in (periodic if periodic is not None else [False] * m))
    if len(periodic) != m:
        raise ValueError(f"periodic flags have length {len(periodic)}, chart dimension is {m}")
    for f in fields:
        for comp in f.components:
            for (e, _, _) in comp.terms:
                for j in range(m):
                    if periodic[j] and e[j]:
                        raise ValueError(
                            f"coefficient {comp} is polynomial in periodic variable x{j + 1}"
                        )
    B = build_free_nilpotent(len(fields), step)
    anchors: list[PolyVF] = []
    for w in B.words:
        if w.is_generator:
            anchors.append(fields[w.generator])
        else:
            anchors.append(vf_bracket(anchors[B.index(w.left)], anchors[B.index(w.right)]))
    return Frame(m=m, fields=fields, step=step, periodic=periodic, basis=B, anchors=tuple(anchors))


def _exact_point(F: Frame, x) -> bool:
    return not F.has_trig and all(is_exact(v) for v in x)


def anchor_matrix(F: Frame, x: Sequence) -> list[list]:
    """m x dim(g) matrix of the evaluated anchor; column k is the anchored word k at x."""
    x = F.check_point(x)
    cols = [a.evaluate(x) for a in F.anchors]
    return [[cols[k][i] for k in range(len(cols))] for i in range(F.m)]


def anchor_at(F: Frame, v: Sequence, x: Sequence) -> tuple:
    """Tangent vector sum_k v_k anchor(b_k)(x)."""
    if len(v) != F.basis.dim:
        raise ValueError(f"element has {len(v)} coordinates, algebra has dimension {F.basis.dim}")
    A = anchor_matrix(F, x)
    return tuple(sum(a * c for a, c in zip(row, v)) for row in A)


def _float_rank(A: np.ndarray) -> int:
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > RANK_RTOL * s[0]))


class HormanderResult(NamedTuple):
    satisfied: bool
    depth: int | None


def check_hormander(F: Frame, x: Sequence) -> HormanderResult:
    """Smallest bracket length k at which the evaluated brackets span T_x."""
    A = anchor_matrix(F, x)
    exact = _exact_point(F, x)
    degrees = F.basis.degrees
    for k in range(1, F.step + 1):
        cols = [j for j, d in enumerate(degrees) if d <= k]
        sub = [[row[j] for j in cols] for row in A]
        r = exact_rank(sub) if exact else _float_rank(np.array(sub, dtype=float))
        if r == F.m:
            return HormanderResult(True, k)
    return HormanderResult(False, None)


def kernel_at(F: Frame, x: Sequence) -> Subspace:
    """ker of the evaluated anchor, a codimension-m subspace of g."""
    A = anchor_matrix(F, x)
    d = F.basis.dim
    if _exact_point(F, x):
        if exact_rank(A) < F.m:
            raise SurjectivityError(f"anchor is not surjective at {tuple(x)}")
        return Subspace.from_rows(nullspace(A, d), d) if d > F.m else Subspace.zero(d)
    Af = np.array(A, dtype=float)
    if _float_rank(Af) < F.m:
        raise SurjectivityError(f"anchor is not surjective at {tuple(x)}")
    K = scipy.linalg.null_space(Af, rcond=RANK_RTOL)
    return Subspace(d, K.T.copy()) if K.size else Subspace.zero(d)


# -- numeric evaluation --------------------------------------------------------


class NumericFrame:
    """Vectorized float evaluation of the fields, their Jacobians and the anchors.

    All methods accept arrays of shape (..., m) and return arrays with the
    same leading shape.
    """

    def __init__(self, F: Frame):
        self.m, self.n, self.dim = F.m, F.n, F.basis.dim
        names = [f"x{i}" for i in range(F.m)]
        self._fields = _compile([[c for c in f.components] for f in F.fields], names)
        self._jac = _compile(
            [[[c.diff(j) for j in range(F.m)] for c in f.components] for f in F.fields], names
        )
        self._anchors = _compile(
            [[a.components[i] for a in F.anchors] for i in range(F.m)], names
        )

    def fields(self, x) -> np.ndarray:
        """Array (..., n, m): row i is X_i(x)."""
        return self._fields(np.asarray(x, dtype=float))

    def jacobians(self, x) -> np.ndarray:
        """Array (..., n, m, m): [i, a, b] = d X_i^a / d x_b."""
        return self._jac(np.asarray(x, dtype=float))

    def anchors(self, x) -> np.ndarray:
        """Array (..., m, dim): column k is the anchored Hall word k."""
        return self._anchors(np.asarray(x, dtype=float))


def _depth(obj) -> int:
    return 0 if isinstance(obj, Poly) else 1 + _depth(obj[0])


def _nested_expr(obj, names) -> str:
    if isinstance(obj, Poly):
        return f"(_z + {obj.expr(names)})"
    inner = ", ".join(_nested_expr(o, names) for o in obj)
    return f"np.stack([{inner}], axis=-{_depth(obj)})"


def _compile(nested, names):
    lines = ["def _f(x):"]
    for i, nm in enumerate(names):
        lines.append(f"    {nm} = x[..., {i}]")
    lines.append("    _z = np.zeros(x.shape[:-1])")
    lines.append(f"    return {_nested_expr(nested, names)}")
    ns = {"np": np}
    exec("\n".join(lines), ns)  # noqa: S102 - generated from exact polynomial data
    return ns["_f"]


# -- group frames -------------------------------------------------------------


@lru_cache(maxsize=None)
def symbolic_bch(B: HallBasis) -> tuple[Poly, ...]:
    """bch(a, b) as polynomials in the 2*dim variables (a_1..a_d, b_1..b_d)."""
    d = B.dim
    a = tuple(Poly.variable(2 * d, i) for i in range(d))
    b = tuple(Poly.variable(2 * d, d + i) for i in range(d))
    return tuple(c if isinstance(c, Poly) else Poly.constant(2 * d, c) for c in bch(B, a, b))


def _restrict(p: Poly, keep: int) -> Poly:
    """Set the trailing variables to zero and drop them."""
    terms = {}
    for (e, h, ph), c in p.terms.items():
        if any(e[keep:]) or any(h[keep:]):
            continue
        terms[(e[:keep], h[:keep], ph)] = c
    return Poly(keep, terms)


def left_invariant_frame(B: HallBasis) -> Frame:
    """Left-invariant fields of the generators on G, in exponential coordinates."""
    d = B.dim
    law = symbolic_bch(B)
    fields = []
    for i in range(B.n):
        comps = [_restrict(law[k].diff(d + i), d) for k in range(d)]
        fields.append(PolyVF(comps))
    return make_frame(fields, B.N)


# -- shipped frames ------------------------------------------------------------


def grushin_frame(step: int = 2) -> Frame:
    """X1 = d/dx, X2 = x d/dy on the plane."""
    one, x = Poly.constant(2, 1), Poly.variable(2, 0)
    return make_frame([PolyVF.coordinate(2, 0, one), PolyVF.coordinate(2, 1, x)], step)


def torus_grushin_frame(step: int = 2) -> Frame:
    """X1 = d/dx, X2 = sin(x) d/dy on the torus S^1 x S^1."""
    one = Poly.constant(2, 1)
    s = Poly.trig(2, (1, 0), "sin")
    return make_frame(
        [PolyVF.coordinate(2, 0, one), PolyVF.coordinate(2, 1, s)], step, periodic=(True, True)
    )


def elliptic_frame(m: int = 2) -> Frame:
    """Coordinate fields d/dx_i, step 1."""
    one = Poly.constant(m, 1)
    return make_frame([PolyVF.coordinate(m, i, one) for i in range(m)], 1)
