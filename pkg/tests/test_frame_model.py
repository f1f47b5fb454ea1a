import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hypocone.frame_model import (ChartError, grushin_frame, SurjectivityError, anchor_at, anchor_matrix, check_hormander,
                                  kernel_at, left_invariant_frame, make_frame, symbolic_bch, vf_bracket)
from hypocone.lie_core import bch, build_free_nilpotent
from hypocone.poly import Poly, PolyVF
from hypocone.tangent_cones import dilated_kernel
from hypocone.grassmann import Subspace

from strategies import rationals

GRUSHIN = grushin_frame()
small = st.builds(Fraction, st.integers(-5, 5), st.integers(1, 3))


@st.composite
def polys(draw, m=2, max_terms=3, max_deg=2):
    p = Poly.zero(m)
    for _ in range(draw(st.integers(0, max_terms))):
        e = [draw(st.integers(0, max_deg)) for _ in range(m)]
        p = p + Poly.monomial(m, e, draw(small))
    return p


@st.composite
def fields(draw, m=2):
    return PolyVF([draw(polys(m)) for _ in range(m)])


@given(polys(), polys(), st.integers(0, 1))
def test_leibniz(p, q, j):
    assert (p * q).diff(j) == p.diff(j) * q + p * q.diff(j)


@given(fields(), fields(), fields())
def test_vector_field_jacobi(X, Y, Z):
    s = vf_bracket(X, vf_bracket(Y, Z)) + vf_bracket(Y, vf_bracket(Z, X)) + vf_bracket(Z, vf_bracket(X, Y))
    assert not s


@given(fields(), fields())
def test_vector_field_bracket_antisymmetric(X, Y):
    assert vf_bracket(X, Y) == -vf_bracket(Y, X)


def test_trig_products_and_derivatives():
    s = Poly.trig(2, (1, 0), "sin")
    c = Poly.trig(2, (1, 0), "cos")
    assert s.diff(0) == c
    assert c.diff(0) == -s
    x = (0.37, 1.2)
    assert math.isclose((s * s + c * c).evaluate(x), 1.0)
    assert (s * s + c * c) == Poly.constant(2, 1)


def test_grushin_anchors(grushin):
    names = ["x", "y"]
    assert [a.pretty(names) for a in grushin.anchors] == ["(1)d/dx", "(x)d/dy", "(1)d/dy"]


@given(rationals, rationals, rationals, rationals, rationals)
def test_grushin_anchor_formula(x, y, v1, v2, v3):
    F = GRUSHIN
    assert anchor_at(F, (v1, v2, v3), (x, y)) == (v1, v2 * x + v3)


@given(rationals, rationals, rationals.filter(lambda t: t > 0))
def test_grushin_dilated_kernel_exact(x, y, t):
    K = dilated_kernel(GRUSHIN, (x, y), t)
    assert K.exact is not None
    assert K.exact_equal(Subspace.from_rows([[0, t, -x]]))


def test_kernel_at(grushin):
    assert kernel_at(grushin, (Fraction(2), Fraction(0))).exact_equal(Subspace.from_rows([[0, 1, -2]]))
    K = kernel_at(grushin, (0.5, 0.0))
    assert K.contains([0, 1, -0.5])


def test_hormander(grushin, elliptic, torus):
    assert check_hormander(grushin, (Fraction(0), Fraction(0))) == (True, 2)
    assert check_hormander(grushin, (1, 0)) == (True, 1)
    assert check_hormander(elliptic, (0, 0)) == (True, 1)
    assert check_hormander(torus, (0.0, 0.0)) == (True, 2)
    F1 = make_frame([PolyVF.coordinate(2, 0, Poly.constant(2, 1))], 3)
    assert check_hormander(F1, (0, 0)) == (False, None)
    with pytest.raises(SurjectivityError):
        kernel_at(F1, (Fraction(0), Fraction(0)))


def test_numeric_matches_exact(grushin, torus):
    rng = np.random.default_rng(1)
    for F in (grushin, torus):
        for _ in range(5):
            x = rng.uniform(-2, 2, F.m)
            A = np.array(anchor_matrix(F, tuple(x)), dtype=float)
            assert np.allclose(F.numeric.anchors(x), A)
        xs = rng.uniform(-1, 1, (4, 7, F.m))
        assert F.numeric.anchors(xs).shape == (4, 7, F.m, F.basis.dim)
        assert F.numeric.jacobians(xs).shape == (4, 7, F.n, F.m, F.m)


def test_left_invariant_frame_brackets():
    B = build_free_nilpotent(2, 3)
    G = left_invariant_frame(B)
    # left-invariant fields satisfy the algebra's own relations: anchor at 0 is the identity
    A = anchor_matrix(G, (Fraction(0),) * B.dim)
    assert A == [[int(i == j) for j in range(B.dim)] for i in range(B.dim)]
    law = symbolic_bch(B)
    rng = np.random.default_rng(3)
    a, b = rng.uniform(-1, 1, B.dim), rng.uniform(-1, 1, B.dim)
    ab = np.concatenate([a, b])
    assert np.allclose([p.evaluate(ab) for p in law], [float(v) for v in bch(B, tuple(a), tuple(b))])


def test_chart_errors(grushin):
    with pytest.raises(ChartError):
        anchor_matrix(grushin, (1, 2, 3))
    with pytest.raises(ChartError):
        anchor_matrix(grushin, (float("nan"), 0))
    with pytest.raises(ValueError):
        make_frame([PolyVF.coordinate(2, 0, Poly.variable(2, 0))], 2, periodic=(True, False))
    with pytest.raises(ValueError):
        make_frame([], 2)


def test_frame_json_round_trip(grushin, tmp_path):
    import json
    from hypocone.model_io import load_model

    p = tmp_path / "m.json"
    p.write_text(json.dumps(grushin.to_json()))
    F, _ = load_model(str(p))
    assert F.fields == grushin.fields and F.anchors == grushin.anchors
