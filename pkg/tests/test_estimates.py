import numpy as np
import pytest
from hypothesis import given, strategies as st

from hypocone.estimates import (BOUNDED_SLOPE, GROWING_SLOPE, REPORT_HEADER, TorusModel, assemble, best_constant,
                                classify_slope, fit_slope, growth_report)
from hypocone.model_io import load_operator
from hypocone.symbols import NCPoly, grushin_operator

T = TorusModel()
X1SQ = NCPoly.word(2, 2, (0, 0))
BRACKET = NCPoly(2, 2, [(1, (0, 1)), (-1, (1, 0))])


@pytest.mark.parametrize("name,P,ell", [("D0_X1sq", X1SQ, 0), ("D3_bracket", BRACKET, 3)])
def test_constants_match_grid_galerkin_oracle(frozen, name, P, ell):
    ref = frozen["galerkin"][name]
    got = [best_constant(T, P, grushin_operator(ell), K) for K in ref["K"]]
    assert np.allclose(got, ref["C_K"], rtol=1e-9)


def test_operator_structure():
    D = assemble(T, grushin_operator(0), 6)
    M = D.dense()
    assert np.allclose(M, M.conj().T)  # X1^2 + X2^2 is symmetric
    assert np.max(np.linalg.eigvalsh(M)) < 1e-9
    assert assemble(T, X1SQ, 6).spillover == 0
    assert 0 < assemble(T, NCPoly.word(2, 2, (1, 1)), 6).spillover < 1


def test_bracket_is_cos_dy():
    """[X1, X2] = cos(x) d/dy on the torus."""
    M = assemble(T, BRACKET, 3).dense()
    K = 3
    modes = [(a, b) for a in range(-K, K + 1) for b in range(-K, K + 1)]
    idx = {m: i for i, m in enumerate(modes)}
    for (a, b), j in idx.items():
        col = np.zeros(len(modes), dtype=complex)
        for s in (1, -1):
            if (a + s, b) in idx:
                col[idx[(a + s, b)]] += 0.5 * 1j * b
        assert np.allclose(M[:, j], col)


@given(st.lists(st.floats(0.1, 10), min_size=3, max_size=6), st.floats(-2, 2))
def test_fit_slope_exact_power_law(scales, p):
    Ks = np.cumsum(scales) + 1
    assert fit_slope(Ks, 3.0 * Ks**p) == pytest.approx(p, abs=1e-9)


def test_classify():
    assert classify_slope(BOUNDED_SLOPE / 2) == "bounded"
    assert classify_slope(GROWING_SLOPE * 2) == "growing"
    assert classify_slope((BOUNDED_SLOPE + GROWING_SLOPE) / 2) == "inconclusive"
    with pytest.raises(ValueError):
        fit_slope([1, 2], [1, 2])


def test_growth_reports():
    rep = growth_report(T, X1SQ, grushin_operator(0), (8, 16, 24))
    assert rep.classification == "bounded" and rep.header == REPORT_HEADER
    assert [r["K"] for r in rep.rows()] == [8, 16, 24]
    rep = growth_report(T, BRACKET, grushin_operator(3), (8, 16, 24))
    assert rep.classification == "growing"


def test_shipped_operators_load(torus):
    P = load_operator("d_ell_3", torus)
    assert P == grushin_operator(3)
    assert load_operator("bracket_word", torus) == BRACKET


def test_rejects_non_torus(grushin):
    with pytest.raises(ValueError):
        TorusModel(grushin)
    with pytest.raises(ValueError):
        assemble(T, X1SQ, 0)


@given(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False))
def test_assembly_is_linear(a, b):
    from hypocone._exact import GaussianRational
    from fractions import Fraction

    def q(z):
        return GaussianRational(Fraction(z.real).limit_denominator(100), Fraction(z.imag).limit_denominator(100))

    ca, cb = q(a), q(b)
    P, Q = X1SQ, NCPoly.word(2, 2, (1, 0))
    lhs = assemble(T, P * ca + Q * cb, 4).dense()
    rhs = complex(ca) * assemble(T, P, 4).dense() + complex(cb) * assemble(T, Q, 4).dense()
    assert np.allclose(lhs, rhs)


def test_dx_is_skew_hermitian_and_spillover_shrinks():
    M = assemble(T, NCPoly.word(2, 2, (0,)), 5).dense()
    assert np.allclose(M, -M.conj().T)
    spill = [assemble(T, grushin_operator(0), K).spillover for K in (4, 8, 16)]
    assert spill[0] > spill[1] > spill[2]


def test_best_constant_monotone_under_restriction():
    import scipy.linalg
    K = 4
    Pm = assemble(T, BRACKET, K).dense()
    Dm = assemble(T, grushin_operator(3), K).dense()
    full = best_constant(T, BRACKET, grushin_operator(3), K)
    rng = np.random.default_rng(0)
    for _ in range(5):
        V = np.linalg.qr(rng.standard_normal((Pm.shape[0], 10)))[0]
        a = (Pm @ V).conj().T @ (Pm @ V)
        b = (Dm @ V).conj().T @ (Dm @ V) + np.eye(10)
        sub = np.sqrt(scipy.linalg.eigh(a, b, eigvals_only=True)[-1])
        assert sub <= full * (1 + 1e-10)
