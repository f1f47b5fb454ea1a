"""Exact scalars and linear algebra over the rationals."""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational

__all__ = [
    "GaussianRational",
    "parse_scalar",
    "to_fraction",
    "rref",
    "rank",
    "nullspace",
    "solve_in_span",
]


class GaussianRational:
    """Complex number p + q*i with rational parts.

    Only what the operator polynomials need: ring operations, equality,
    hashing and conversion to ``complex``.
    """

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @staticmethod
    def _lift(other):
        if isinstance(other, GaussianRational):
            return other
        if isinstance(other, (int, Rational)):
            return GaussianRational(other, 0)
        return NotImplemented

    def simplify(self):
        """Collapse to a ``Fraction`` when the imaginary part vanishes."""
        return self.re if self.im == 0 else self

    def __add__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            if isinstance(other, (float, complex)):
                return complex(self) + other
            return NotImplemented
        return GaussianRational(self.re + o.re, self.im + o.im).simplify()

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            if isinstance(other, (float, complex)):
                return complex(self) * other
            return NotImplemented
        return GaussianRational(
            self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re
        ).simplify()

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return NotImplemented
        den = o.re * o.re + o.im * o.im
        return (self * GaussianRational(o.re / den, -o.im / den))

    def __pow__(self, k: int):
        out = Fraction(1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return complex(self) == other
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __float__(self):
        if self.im:
            raise TypeError("non-real Gaussian rational has no float value")
        return float(self.re)

    def __repr__(self):
        return f"GaussianRational({self.re}, {self.im})"

    def __str__(self):
        return format_scalar(self)


def parse_scalar(text) -> Fraction | GaussianRational:
    """Parse ``"p/q"``, ``"3i"``, ``"-1/2+3i"`` etc. into an exact scalar.

    Ints and Fractions pass through.  Floats are rejected: model files are
    meant to be exact.
    """
    if isinstance(text, bool):
        raise ValueError(f"not a scalar: {text!r}")
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    if not isinstance(text, str):
        raise ValueError(f"expected a rational literal string, got {text!r}")
    s = text.replace(" ", "")
    if not s:
        raise ValueError("empty scalar literal")
    if not s.endswith("i"):
        try:
            return Fraction(s)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"bad rational literal {text!r}") from exc
    body = s[:-1]
    # split "a+b" / "a-b" at the last sign that is not leading
    cut = max(body.rfind("+"), body.rfind("-"))
    if cut > 0:
        re_part, im_part = body[:cut], body[cut:]
    else:
        re_part, im_part = "0", body
    if im_part in ("", "+"):
        im_part = "1"
    elif im_part == "-":
        im_part = "-1"
    try:
        out = GaussianRational(Fraction(re_part), Fraction(im_part))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad complex literal {text!r}") from exc
    return out.simplify()


def format_scalar(c) -> str:
    """Inverse of :func:`parse_scalar` for exact scalars."""
    if isinstance(c, GaussianRational):
        if c.im == 0:
            return str(c.re)
        im = "" if abs(c.im) == 1 else str(abs(c.im))
        if c.re == 0:
            return f"{'-' if c.im < 0 else ''}{im}i"
        return f"{c.re}{'-' if c.im < 0 else '+'}{im}i"
    if isinstance(c, Fraction):
        return str(c)
    if isinstance(c, int):
        return str(c)
    if isinstance(c, complex):
        return repr(c)
    return repr(float(c))


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction, GaussianRational))


# -- linear algebra over Q --------------------------------------------------


def rref(rows, ncols=None):
    """Reduced row echelon form.

    Returns ``(R, pivots)`` where ``R`` holds only the nonzero rows.
    """
    M = [[Fraction(v) for v in r] for r in rows]
    if ncols is None:
        ncols = len(M[0]) if M else 0
    pivots = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(M)) if M[i][c] != 0), None)
        if p is None:
            continue
        M[r], M[p] = M[p], M[r]
        inv = 1 / M[r][c]
        M[r] = [v * inv for v in M[r]]
        for i in range(len(M)):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                Mi, Mr = M[i], M[r]
                M[i] = [a - f * b for a, b in zip(Mi, Mr)]
        pivots.append(c)
        r += 1
        if r == len(M):
            break
    return M[:r], pivots


def rank(rows) -> int:
    if not rows:
        return 0
    return len(rref(rows)[1])


def nullspace(rows, ncols: int):
    """Basis of {v : rows @ v = 0}, one vector per free column."""
    R, pivots = rref(rows, ncols) if rows else ([], [])
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, p in zip(R, pivots):
            v[p] = -row[f]
        basis.append(v)
    return basis


def solve_in_span(basis, target):
    """Coefficients c with sum_k c_k basis[k] == target, or None."""
    k = len(basis)
    if k == 0:
        return [] if all(t == 0 for t in target) else None
    ncols = len(target)
    # columns are basis vectors, augmented by target
    aug = [[basis[j][i] for j in range(k)] + [target[i]] for i in range(ncols)]
    R, pivots = rref(aug, k + 1)
    if k in pivots:
        return None
    c = [Fraction(0)] * k
    for row, p in zip(R, pivots):
        c[p] = row[k]
    return c
