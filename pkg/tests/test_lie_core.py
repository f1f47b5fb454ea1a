from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from hypocone.lie_core import (BasisSizeError, adjoint, adjoint_matrix, basis_vector, bch, bracket,
                               build_free_nilpotent, coadjoint, dilate, dynkin_coefficients, orbit_dimension,
                               witt_dimension)

from strategies import elements, rationals

B22 = build_free_nilpotent(2, 2)
B23 = build_free_nilpotent(2, 3)
B32 = build_free_nilpotent(3, 2)
B24 = build_free_nilpotent(2, 4)


def neg(a):
    return tuple(-x for x in a)


def add(a, b):
    return tuple(x + y for x, y in zip(a, b))


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("N", [1, 2, 3, 4, 5])
def test_graded_dimensions_match_witt_oracle(frozen, n, N):
    B = build_free_nilpotent(n, N)
    assert list(B.graded_dimensions()) == frozen["witt"][str(n)][:N]
    assert [witt_dimension(n, d) for d in range(1, N + 1)] == frozen["witt"][str(n)][:N]


def test_words_are_ordered_by_degree():
    B = build_free_nilpotent(3, 4)
    assert list(B.degrees) == sorted(B.degrees)
    assert all(w.degree == d for w, d in zip(B.words, B.degrees))


def test_heisenberg_structure():
    assert B22.dim == 3
    assert str(B22.words[2]) == "[X1,X2]"
    assert bracket(B22, basis_vector(B22, 0), basis_vector(B22, 1)) == (0, 0, 1)


def test_dimension_cap():
    with pytest.raises(BasisSizeError):
        build_free_nilpotent(4, 6, cap=100)
    with pytest.raises(ValueError):
        build_free_nilpotent(0, 2)


def test_dynkin_low_order():
    coeffs = dict(dynkin_coefficients(3))
    assert coeffs[(0,)] == 1 and coeffs[(1,)] == 1
    assert coeffs[(0, 1)] - coeffs[(1, 0)] == Fraction(1, 2)  # [X,Y] and [Y,X] stored separately
    with pytest.raises(ValueError):
        dynkin_coefficients(7)


def test_bch_matches_matrix_oracle(frozen):
    for row in frozen["bch_heisenberg"]:
        a = tuple(Fraction(v) for v in row["a"])
        b = tuple(Fraction(v) for v in row["b"])
        assert bch(B22, a, b) == tuple(Fraction(v) for v in row["c"])


@given(elements(B23.dim), elements(B23.dim))
def test_bracket_antisymmetric(a, b):
    assert bracket(B23, a, b) == neg(bracket(B23, b, a))


@given(elements(B24.dim), elements(B24.dim), elements(B24.dim))
def test_jacobi(a, b, c):
    s = add(add(bracket(B24, a, bracket(B24, b, c)), bracket(B24, b, bracket(B24, c, a))),
            bracket(B24, c, bracket(B24, a, b)))
    assert not any(s)


@pytest.mark.parametrize("B", [B23, B32], ids=["g23", "g32"])
@given(data=st.data())
def test_bch_is_a_group_law(B, data):
    a, b, c = (data.draw(elements(B.dim)) for _ in range(3))
    zero = (Fraction(0),) * B.dim
    assert bch(B, bch(B, a, b), c) == bch(B, a, bch(B, b, c))
    assert bch(B, a, neg(a)) == zero
    assert bch(B, a, zero) == tuple(a)


@given(elements(B23.dim), elements(B23.dim), rationals.filter(lambda t: t > 0))
def test_dilation_is_an_automorphism(a, b, t):
    assert dilate(B23, t, bch(B23, a, b)) == bch(B23, dilate(B23, t, a), dilate(B23, t, b))
    assert dilate(B23, t, bracket(B23, a, b)) == bracket(B23, dilate(B23, t, a), dilate(B23, t, b))


@given(elements(B23.dim), elements(B23.dim), elements(B23.dim))
def test_adjoint_is_a_homomorphism(g, h, v):
    assert adjoint(B23, bch(B23, g, h), v) == adjoint(B23, g, adjoint(B23, h, v))
    A = adjoint_matrix(B23, g)
    assert adjoint(B23, g, v) == tuple(sum(A[i][j] * v[j] for j in range(B23.dim)) for i in range(B23.dim))


@given(elements(3), elements(3))
def test_coadjoint_matches_closed_form(g, xi):
    f1, f2, f3 = xi
    assert coadjoint(B22, g, xi) == (f1 + g[1] * f3, f2 - g[0] * f3, f3)


@given(elements(3))
def test_orbit_dimension_heisenberg(xi):
    assert orbit_dimension(B22, xi) == (2 if xi[2] else 0)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        bch(B22, (1, 2), (1, 2, 3))
    with pytest.raises(ValueError):
        dilate(B22, 0, (1, 2, 3))


@pytest.mark.parametrize("n,N", [(2, 4), (3, 3), (2, 5)])
def test_structure_constants_graded_and_antisymmetric(n, N):
    B = build_free_nilpotent(n, N)
    for (i, j), terms in B.table.items():
        assert dict(B.table[(j, i)]) == {k: -c for k, c in terms}
        for k, c in terms:
            assert c != 0 and B.degrees[k] == B.degrees[i] + B.degrees[j]


def test_single_generator_is_abelian():
    for N in (1, 3, 5):
        B = build_free_nilpotent(1, N)
        assert B.dim == 1 and not B.table
