from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypocone._exact import GaussianRational
from hypocone.frame_model import grushin_frame
from hypocone.lie_core import build_free_nilpotent
from hypocone.poly import Poly
from hypocone.symbols import (Character, Custom, NCPoly, Schrodinger, UnclassifiedStratum, check_max_hypoelliptic,
                              check_representation, dpi, grushin_operator, heisenberg_catalog, hormander_degree,
                              injectivity_margin, presentation_gap, symbol, top_part_at)

from strategies import rationals

G = grushin_frame()
B = G.basis


@given(rationals, rationals, rationals, rationals, rationals)
def test_character_symbol_is_exact(a, b, ell, x, y):
    S = symbol(grushin_operator(ell), (x, y), Character((a, b)), B)
    assert S.is_scalar
    assert S.value == -(a * a + b * b)
    assert not isinstance(S.value, float)


@pytest.mark.parametrize("ell", [0, 2, Fraction(1001, 1000), -5])
@pytest.mark.parametrize("eps", [1, -1])
def test_schrodinger_interior_spectrum(frozen, ell, eps):
    S = symbol(grushin_operator(ell), (0, 0), Schrodinger(eps, 200), B)
    ev = np.sort(np.linalg.eigvals(S.value[:100, :100]).real)[::-1]
    expected = np.array(frozen["hermite_eigenvalues"], dtype=float) - float(ell) * eps
    assert np.max(np.abs(ev[:50] - expected)) < 1e-8
    # the interior block is diagonal in the Hermite basis
    assert np.max(np.abs(S.value[:100, :100] - np.diag(np.diag(S.value[:100, :100])))) < 1e-9


@pytest.mark.parametrize("eps", [1, -1])
@pytest.mark.parametrize("scale", [1.0, 2.5])
def test_schrodinger_bracket_relations(eps, scale):
    assert check_representation(Schrodinger(eps, 40, scale), B) < 1e-12


def test_custom_representation_checked():
    X, Y = np.zeros((2, 2)), np.zeros((2, 2))
    Z = np.eye(2)
    with pytest.raises(ValueError):
        symbol(grushin_operator(0), (0, 0), Custom((X, Y, Z)), B)
    ok = Custom((X, Y, np.zeros((2, 2))))
    assert check_representation(ok, B) == 0
    with pytest.raises(ValueError):
        Custom((np.zeros((2, 3)),))


def test_dpi_errors():
    with pytest.raises(ValueError):
        dpi(Character((1, 2, 3)), B, 0)
    with pytest.raises(ValueError):
        dpi(Schrodinger(1, 8), build_free_nilpotent(2, 3), 0)
    with pytest.raises(ValueError):
        Schrodinger(2)
    assert dpi(Character((Fraction(1), 2)), B, 0) == GaussianRational(0, 1)
    assert dpi(Character((1, 2)), B, 2) == 0


def test_degree_and_top_part():
    x = Poly.variable(2, 0)
    P = NCPoly(2, 2, [(x, (0, 1)), (1, (0,)), (3, ())])
    assert hormander_degree(P) == 2
    assert hormander_degree(NCPoly(2, 2)) == float("-inf")
    top = top_part_at(P, (Fraction(5), 0))
    assert top == NCPoly(2, 2, [(5, (0, 1))])


def test_ncpoly_json_round_trip():
    P = grushin_operator(Poly.variable(2, 1) * 3 + 1)
    assert NCPoly.from_json(2, 2, P.to_json()) == P
    with pytest.raises(ValueError):
        NCPoly(2, 2, [(1, (2,))])


def test_variable_coefficient_is_frozen_at_x():
    ell = Poly.variable(2, 1)  # ell(x, y) = y
    P = grushin_operator(ell)
    S = symbol(P, (0, 3), Schrodinger(-1, 40), B)
    assert injectivity_margin(S) < 1e-9  # 3 = 2*1 + 1
    S = symbol(P, (0, 2), Schrodinger(-1, 40), B)
    assert injectivity_margin(S) == pytest.approx(1.0)


def test_margin_of_scalar():
    assert injectivity_margin(symbol(grushin_operator(0), (0, 0), Character((3, 4)), B)) == 25


def test_presentation_gap_zero_for_equal_symbols():
    P = grushin_operator(2)
    Q = NCPoly(2, 2, [(1, (0, 0)), (1, (1, 1)), (GaussianRational(0, 4), (0, 1)), (GaussianRational(0, -2), (1, 0))])
    # Q = X1^2 + X2^2 + 4i X1X2 - 2i X2X1 is a different operator
    reps = [Character((1, 2)), Schrodinger(1, 16)]
    assert presentation_gap(P, P, (0, 0), reps, B) == 0
    assert presentation_gap(P, Q, (0, 0), reps, B) > 0.5


def test_catalog_covers_strata():
    from hypocone.grassmann import Subspace
    reps = heisenberg_catalog(B, [Subspace.from_rows([[0, 0, 1]])], K=16, circle=8)
    assert len(reps) == 8 and all(isinstance(r, Character) for r in reps)
    reps = heisenberg_catalog(B, [Subspace.from_rows([[0, 1, 0]])], K=16)
    labels = [r.label() for r in reps]
    assert "character(1,0)" in labels and "character(-1,0)" in labels
    assert any(isinstance(r, Schrodinger) for r in reps)
    with pytest.raises(UnclassifiedStratum):
        heisenberg_catalog(build_free_nilpotent(2, 3), [], K=8)


@pytest.mark.parametrize("ell,expected", [(0, True), (2, True), (Fraction(1001, 1000), True),
                                          (1, False), (3, False), (-5, False)])
def test_hypoellipticity_verdicts(ell, expected):
    grid = [(0, 0), (1, 0), (Fraction(-1, 2), 3)]
    rep = check_max_hypoelliptic(G, grushin_operator(ell), grid)
    assert rep.hypoelliptic is expected
    assert all(p.hypoelliptic for p in rep.points if p.point[0] != 0)
    if not expected:
        bad = rep.failing()[0]
        assert bad.point == (0, 0) and bad.margin < 1e-6
        assert ("eps=+1" in bad.worst) == (ell < 0)


@given(st.integers(-6, 6))
@settings(max_examples=13)
def test_odd_integer_rule(k):
    """Failure at the singular line happens exactly when ell is an odd integer."""
    rep = check_max_hypoelliptic(G, grushin_operator(k), [(0, 0)])
    assert rep.hypoelliptic is (k % 2 == 0)


def test_user_catalog():
    rep = check_max_hypoelliptic(G, grushin_operator(1), [(0, 0)], rep_catalog=[Character((1, 0))])
    assert rep.hypoelliptic
    with pytest.raises(UnclassifiedStratum):
        check_max_hypoelliptic(G, grushin_operator(1), [(0, 0)], rep_catalog=[])


def test_schrodinger_images_symmetry():
    from hypocone.symbols import _schrodinger_images
    d, it, c = _schrodinger_images(Schrodinger(1, 12))
    assert np.allclose(d, -d.T) and np.allclose(it.imag, it.imag.T) and np.allclose(it.real, 0)
    assert np.allclose(c, 1j * np.eye(12))
