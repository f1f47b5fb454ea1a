"""Exact polynomial / trigonometric-polynomial coefficient functions.

A term is ``c * x**e * trig(h . x)`` with ``trig`` either ``cos`` or ``sin``
and integer harmonics ``h``.  Plain polynomial terms carry ``h = 0`` with the
``cos`` phase.  The class is closed under products and partial derivatives,
which is all vector-field brackets need.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence

from ._exact import GaussianRational, format_scalar, is_exact, parse_scalar

__all__ = ["Poly", "PolyVF"]

COS, SIN = "cos", "sin"


def _canon(h: tuple[int, ...], phase: str, c):
    """Canonical (h, phase, c): first nonzero harmonic positive, sin(0) dropped."""
    if not any(h):
        if phase == SIN:
            return None
        return h, COS, c
    first = next(k for k in h if k)
    if first < 0:
        h = tuple(-k for k in h)
        if phase == SIN:
            c = -c
    return h, phase, c


def _trig_product(h1, p1, h2, p2):
    """Product-to-sum: list of (h, phase, factor)."""
    if not any(h1):
        return [(h2, p2, 1)]
    if not any(h2):
        return [(h1, p1, 1)]
    hp = tuple(a + b for a, b in zip(h1, h2))
    hm = tuple(a - b for a, b in zip(h1, h2))
    half = Fraction(1, 2)
    if p1 == COS and p2 == COS:
        return [(hm, COS, half), (hp, COS, half)]
    if p1 == SIN and p2 == SIN:
        return [(hm, COS, half), (hp, COS, -half)]
    if p1 == SIN and p2 == COS:
        return [(hp, SIN, half), (hm, SIN, half)]
    return [(hp, SIN, half), (hm, SIN, -half)]


class Poly:
    """Immutable sum of monomial x trig terms in ``m`` variables."""

    __slots__ = ("m", "terms", "_hash")

    def __init__(self, m: int, terms=None):
        self.m = m
        acc: dict = {}
        for (e, h, p), c in (terms or {}).items():
            canon = _canon(tuple(h), p, c)
            if canon is None:
                continue
            h2, p2, c2 = canon
            key = (tuple(e), h2, p2)
            acc[key] = acc.get(key, 0) + c2
        self.terms = {k: v for k, v in acc.items() if v != 0}
        self._hash = None

    # -- constructors -----------------------------------------------------

    @classmethod
    def zero(cls, m: int) -> "Poly":
        return cls(m)

    @classmethod
    def constant(cls, m: int, c) -> "Poly":
        return cls(m, {((0,) * m, (0,) * m, COS): _exactify(c)})

    @classmethod
    def monomial(cls, m: int, exponents: Sequence[int], c=1) -> "Poly":
        return cls(m, {(tuple(exponents), (0,) * m, COS): _exactify(c)})

    @classmethod
    def variable(cls, m: int, i: int) -> "Poly":
        e = [0] * m
        e[i] = 1
        return cls.monomial(m, e)

    @classmethod
    def trig(cls, m: int, harmonics: Sequence[int], phase: str, c=1) -> "Poly":
        if phase not in (COS, SIN):
            raise ValueError(f"phase must be 'sin' or 'cos', got {phase!r}")
        return cls(m, {((0,) * m, tuple(harmonics), phase): _exactify(c)})

    # -- arithmetic -------------------------------------------------------

    def _lift(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.m != self.m:
                raise ValueError(f"variable count mismatch: {self.m} vs {other.m}")
            return other
        return Poly.constant(self.m, other)

    def __add__(self, other):
        if not isinstance(other, Poly) and other == 0:
            return self
        o = self._lift(other)
        terms = dict(self.terms)
        for k, v in o.terms.items():
            terms[k] = terms.get(k, 0) + v
        return Poly(self.m, terms)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.m, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Poly):
            if other == 0:
                return Poly(self.m)
            return Poly(self.m, {k: v * other for k, v in self.terms.items()})
        o = self._lift(other)
        acc: dict = {}
        for (e1, h1, p1), c1 in self.terms.items():
            for (e2, h2, p2), c2 in o.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                for h, p, f in _trig_product(h1, p1, h2, p2):
                    canon = _canon(h, p, c1 * c2 * f)
                    if canon is None:
                        continue
                    hc, pc, cc = canon
                    key = (e, hc, pc)
                    acc[key] = acc.get(key, 0) + cc
        return Poly(self.m, acc)

    def __rmul__(self, other):
        return self * other

    def __pow__(self, k: int):
        out = Poly.constant(self.m, 1)
        for _ in range(k):
            out = out * self
        return out

    def diff(self, j: int) -> "Poly":
        """Partial derivative in variable j."""
        acc: dict = {}
        for (e, h, p), c in self.terms.items():
            if e[j]:
                e2 = list(e)
                e2[j] -= 1
                key = (tuple(e2), h, p)
                acc[key] = acc.get(key, 0) + c * e[j]
            if h[j]:
                # d cos(h.x) = -h_j sin(h.x),  d sin(h.x) = h_j cos(h.x)
                if p == COS:
                    key, f = (e, h, SIN), -h[j]
                else:
                    key, f = (e, h, COS), h[j]
                acc[key] = acc.get(key, 0) + c * f
        return Poly(self.m, acc)

    # -- queries ----------------------------------------------------------

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.m == other.m and self.terms == other.terms
        if other == 0:
            return not self.terms
        return self == Poly.constant(self.m, other)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.m, frozenset(self.terms.items())))
        return self._hash

    @property
    def has_trig(self) -> bool:
        return any(any(h) for (_, h, _) in self.terms)

    @property
    def is_exact(self) -> bool:
        return all(is_exact(c) for c in self.terms.values())

    def is_constant(self) -> bool:
        return all(not any(e) and not any(h) for (e, h, _) in self.terms)

    def degree(self) -> int:
        return max((sum(e) for (e, _, _) in self.terms), default=0)

    def __call__(self, x: Sequence):
        return self.evaluate(x)

    def evaluate(self, x: Sequence):
        """Value at x; exact when x, the coefficients and the terms allow it."""
        if len(x) != self.m:
            raise ValueError(f"point has {len(x)} coordinates, expected {self.m}")
        exact = not self.has_trig and self.is_exact and all(is_exact(v) for v in x)
        total = 0 if exact else 0.0
        for (e, h, p), c in self.terms.items():
            val = c if exact else _num(c)
            for xi, ei in zip(x, e):
                if ei:
                    val = val * (xi if exact else float(xi)) ** ei
            if any(h):
                arg = sum(hk * float(xk) for hk, xk in zip(h, x))
                val = val * (math.cos(arg) if p == COS else math.sin(arg))
            total = total + val
        return total

    def expr(self, names: Sequence[str], lib: str = "np") -> str:
        """Python expression evaluating the polynomial (for code generation)."""
        if not self.terms:
            return "0.0"
        parts = []
        for (e, h, p), c in sorted(self.terms.items(), key=lambda kv: repr(kv[0])):
            factors = [repr(_num(c))]
            for name, ei in zip(names, e):
                if ei == 1:
                    factors.append(name)
                elif ei:
                    factors.append(f"{name}**{ei}")
            if any(h):
                arg = "+".join(f"({hk})*{name}" for hk, name in zip(h, names) if hk)
                factors.append(f"{lib}.{p}({arg})")
            parts.append("*".join(factors))
        return "(" + " + ".join(parts) + ")"

    # -- serialization ----------------------------------------------------

    def to_json(self) -> list:
        out = []
        for (e, h, p), c in sorted(self.terms.items(), key=lambda kv: repr(kv[0])):
            t = {"coeff": format_scalar(c)}
            if any(e) or not any(h):
                t["exponents"] = list(e)
            if any(h):
                t["harmonics"] = list(h)
                t["phase"] = p
            out.append(t)
        return out

    @classmethod
    def from_json(cls, m: int, data) -> "Poly":
        """Accepts a list of terms, a single term object, or a bare scalar literal."""
        if isinstance(data, (str, int)):
            return cls.constant(m, parse_scalar(data))
        if isinstance(data, dict):
            data = [data]
        terms: dict = {}
        for t in data:
            c = parse_scalar(t["coeff"])
            e = tuple(t.get("exponents", [0] * m))
            h = tuple(t.get("harmonics", [0] * m))
            p = t.get("phase", COS)
            if len(e) != m or len(h) != m:
                raise ValueError(f"term {t} does not have {m} exponents/harmonics")
            if p not in (COS, SIN):
                raise ValueError(f"phase must be 'sin' or 'cos', got {p!r}")
            if any(k < 0 for k in e):
                raise ValueError(f"negative exponent in {t}")
            key = (e, h, p)
            terms[key] = terms.get(key, 0) + c
        return cls(m, terms)

    def __repr__(self):
        return f"Poly({self.m}, {self.to_json()})"

    def __str__(self):
        return self.pretty()

    def pretty(self, names: Sequence[str] | None = None) -> str:
        names = names or [f"x{i + 1}" for i in range(self.m)]
        if not self.terms:
            return "0"
        parts = []
        for (e, h, p), c in sorted(self.terms.items(), key=lambda kv: repr(kv[0])):
            f = [] if (c == 1 and (any(e) or any(h))) else [format_scalar(c)]
            f += [n if k == 1 else f"{n}^{k}" for n, k in zip(names, e) if k]
            if any(h):
                arg = "+".join(
                    (n if hk == 1 else f"{hk}{n}") for hk, n in zip(h, names) if hk
                )
                f.append(f"{p}({arg})")
            parts.append("*".join(f))
        return " + ".join(parts)


def _exactify(c):
    if isinstance(c, (int, Fraction, GaussianRational)):
        return Fraction(c) if isinstance(c, int) else c
    if isinstance(c, str):
        return parse_scalar(c)
    return c


def _num(c):
    if isinstance(c, GaussianRational):
        return complex(c)
    if isinstance(c, complex):
        return c
    return float(c)


class PolyVF:
    """Vector field sum_k comp[k] d/dx_k with Poly components."""

    __slots__ = ("components",)

    def __init__(self, components: Iterable[Poly]):
        self.components = tuple(components)
        ms = {c.m for c in self.components}
        if len(ms) > 1 or (ms and ms.pop() != len(self.components)):
            raise ValueError("vector field components must all live on the same m-chart")

    @property
    def m(self) -> int:
        return len(self.components)

    @classmethod
    def zero(cls, m: int) -> "PolyVF":
        return cls(Poly.zero(m) for _ in range(m))

    @classmethod
    def coordinate(cls, m: int, i: int, coeff: Poly | None = None) -> "PolyVF":
        comps = [Poly.zero(m)] * m
        comps[i] = coeff if coeff is not None else Poly.constant(m, 1)
        return cls(comps)

    def __add__(self, other: "PolyVF") -> "PolyVF":
        return PolyVF(a + b for a, b in zip(self.components, other.components))

    def __sub__(self, other: "PolyVF") -> "PolyVF":
        return PolyVF(a - b for a, b in zip(self.components, other.components))

    def __neg__(self):
        return PolyVF(-a for a in self.components)

    def scale(self, c) -> "PolyVF":
        return PolyVF(a * c for a in self.components)

    def __eq__(self, other):
        return isinstance(other, PolyVF) and self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def __bool__(self):
        return any(self.components)

    def apply(self, f: Poly) -> Poly:
        """Directional derivative X(f)."""
        out = Poly.zero(self.m)
        for j, c in enumerate(self.components):
            if c:
                out = out + c * f.diff(j)
        return out

    def evaluate(self, x: Sequence) -> tuple:
        return tuple(c.evaluate(x) for c in self.components)

    @property
    def has_trig(self) -> bool:
        return any(c.has_trig for c in self.components)

    def to_json(self) -> list:
        return [c.to_json() for c in self.components]

    @classmethod
    def from_json(cls, m: int, data) -> "PolyVF":
        if len(data) != m:
            raise ValueError(f"vector field has {len(data)} components, chart dimension is {m}")
        return cls(Poly.from_json(m, c) for c in data)

    def __repr__(self):
        return f"PolyVF({[str(c) for c in self.components]})"

    def pretty(self, names: Sequence[str] | None = None) -> str:
        names = names or [f"x{i + 1}" for i in range(self.m)]
        parts = [f"({c.pretty(names)})d/d{n}" for c, n in zip(self.components, names) if c]
        return " + ".join(parts) or "0"
