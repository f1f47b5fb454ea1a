import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypocone.frame_model import SurjectivityError, grushin_frame, make_frame
from hypocone.grassmann import Subspace, grassmann_distance
from hypocone.lie_core import build_free_nilpotent
from hypocone.poly import Poly, PolyVF
from hypocone.tangent_cones import (ApproachPath, ConeSampling, CovectorPath, DivergenceReport, cone_g0,
                                    covector_path_to, dilated_kernel, hn_membership_def2, hn_residual,
                                    hn_sample_def1, is_subalgebra, limit_along, snap_rational)

G = grushin_frame()
X3 = Subspace.from_rows([[0, 0, 1]])
X2 = Subspace.from_rows([[0, 1, 0]])


def x2_plus(lam):
    return Subspace.from_rows([[0, 1, lam]])


@pytest.mark.parametrize("x", [(1.0, 0.0), (-0.5, 3.0), (2.0, -1.0)])
def test_limit_off_axis_is_central_line(x):
    for P in (ApproachPath.fixed(x), ApproachPath.ray(x, 0, 1.0), ApproachPath.ray(x, 1, -2.0),
              ApproachPath.sqrt_ray(x, 0, 1.0)):
        L = limit_along(G, P)
        assert isinstance(L, Subspace)
        assert grassmann_distance(L, X3) < 1e-8
        assert is_subalgebra(G.basis, L)


@given(st.floats(-20, 20, allow_nan=False))
@settings(max_examples=25)
def test_ray_family_at_origin(lam):
    L = limit_along(G, ApproachPath.ray((0.0, 0.0), 0, lam))
    assert grassmann_distance(L, x2_plus(lam)) < 1e-8


def test_origin_special_paths():
    assert grassmann_distance(limit_along(G, ApproachPath.fixed((0, 0))), X2) < 1e-8
    for sign in (1, -1):
        assert grassmann_distance(limit_along(G, ApproachPath.sqrt_ray((0, 0), 0, sign)), X3) < 1e-8


def test_oscillating_sequence_diverges():
    ts = [0.5 / 2**j for j in range(30)]
    xs = [((-1) ** j * t, 0.0) for j, t in enumerate(ts)]
    r = limit_along(G, ApproachPath.from_samples(xs, ts))
    assert isinstance(r, DivergenceReport) and not r
    assert r.gaps and r.reason


def test_from_samples_validation():
    with pytest.raises(ValueError):
        ApproachPath.from_samples([(0, 0)], [0.0])
    with pytest.raises(ValueError):
        ApproachPath.from_samples([(0, 0)], [])


def test_dilated_kernel_float_matches_exact():
    K1 = dilated_kernel(G, (Fraction(1, 3), Fraction(2)), Fraction(1, 10))
    K2 = dilated_kernel(G, (1 / 3, 2.0), 0.1)
    assert grassmann_distance(K1, K2) < 1e-12
    with pytest.raises(ValueError):
        dilated_kernel(G, (0, 0), 0)


def test_is_subalgebra():
    B = G.basis
    assert is_subalgebra(B, X3)
    assert is_subalgebra(B, x2_plus(Fraction(3, 2)))
    assert not is_subalgebra(B, Subspace.from_rows([[1, 0, 0], [0, 1, 0]]))
    assert not is_subalgebra(B, Subspace.from_rows([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))
    B3 = build_free_nilpotent(2, 3)
    assert is_subalgebra(B3, Subspace.from_rows([[Fraction(int(i == k)) for i in range(5)] for k in (2, 3, 4)]))


def test_snap_rational():
    S = Subspace.from_rows([[0.0, 1.0, 0.5 + 1e-12]])
    T = snap_rational(S)
    assert T.exact is not None and T.exact_equal(x2_plus(Fraction(1, 2)))
    irr = Subspace.from_rows([[0.0, 1.0, math.pi]])
    assert snap_rational(irr).exact is None


def test_cone_off_axis():
    c = cone_g0(G, (1, 0))
    assert len(c.members) == 1
    assert c.members[0].subspace.exact_equal(X3)
    assert c.members[0].stratum == "generic"


def test_cone_at_origin():
    c = cone_g0(G, (0, 0))
    subs = c.subspaces()
    assert any(S.exact is not None and S.exact_equal(X2) for S in subs)
    assert any(S.exact is not None and S.exact_equal(X3) for S in subs)
    for lam in (Fraction(1, 2), 1, 2, 8, -8):
        assert any(S.exact is not None and S.exact_equal(x2_plus(lam)) for S in subs)
    assert all(mb.subalgebra for mb in c.members)
    assert all(mb.adjoint_residual < 1e-6 for mb in c.members)
    gen = [mb for mb in c.members if mb.stratum == "generic"]
    assert len(gen) == 1 and gen[0].subspace.exact_equal(X2)
    # families reach lambda values off the sampling grid
    assert c.distance_to(x2_plus(math.e)) < 1e-7


def test_cone_rejects_non_surjective_frame():
    F1 = make_frame([PolyVF.coordinate(2, 0, Poly.constant(2, 1))], 2)
    with pytest.raises(SurjectivityError):
        cone_g0(F1, (0, 0))


def test_elliptic_cone_is_trivial(elliptic):
    c = cone_g0(elliptic, (0.3, -1.0))
    assert [mb.subspace.dim for mb in c.members] == [0]
    assert hn_membership_def2(elliptic, (0.3, -1.0), (1.0, 2.0))


@pytest.mark.parametrize("seed", range(20))
def test_hn_cone_verdicts(seed):
    rng = np.random.default_rng(seed)
    xi = rng.uniform(-3, 3, 3)
    off = ConeSampling()
    # away from the singular line the cone is the annihilator of X3
    assert hn_membership_def2(G, (1, 0), xi, off) is False
    assert hn_membership_def2(G, (1, 0), (xi[0], xi[1], 0.0), off)
    # on it, every functional annihilates some cone algebra
    assert hn_membership_def2(G, (0, 0), xi, off)


def test_hn_residual_monotone_in_perturbation():
    r0 = hn_residual(G, (1, 0), (1.0, 2.0, 0.0))
    r1 = hn_residual(G, (1, 0), (1.0, 2.0, 0.1))
    assert r0 < 1e-12 < r1


def test_def1_fixed_path_central_functional():
    C = CovectorPath(ApproachPath.fixed((0, 0)), lambda s, x, t: np.array([0.0, 2.5 / t**2]))
    lim = hn_sample_def1(G, C)
    assert np.allclose(lim, (0.0, 0.0, 2.5), atol=1e-10)


def test_def1_attains_functional_along_ray():
    xi = (0.3, 1.0, -0.5)  # annihilates X2 + 2 X3
    lim = hn_sample_def1(G, covector_path_to(G, xi, ApproachPath.ray((0, 0), 0, 2.0)))
    assert np.allclose(lim, xi, atol=1e-8)


def test_def1_and_def2_agree_on_members():
    rng = np.random.default_rng(5)
    for _ in range(5):
        lam = float(rng.uniform(-3, 3))
        f1, f3 = rng.uniform(-2, 2, 2)
        xi = (f1, -lam * f3, f3)
        assert hn_membership_def2(G, (0, 0), xi)
        lim = hn_sample_def1(G, covector_path_to(G, xi, ApproachPath.ray((0, 0), 0, lam)))
        assert np.allclose(lim, xi, atol=1e-7)


def test_def1_divergence_reported():
    C = CovectorPath(ApproachPath.fixed((1, 0)), lambda s, x, t: np.array([1.0 / t**2, 0.0]))
    r = hn_sample_def1(G, C)
    assert isinstance(r, DivergenceReport)


def test_generator_span_is_not_subalgebra_in_step_three():
    B3 = build_free_nilpotent(2, 3)
    e = [[Fraction(int(i == k)) for i in range(5)] for k in range(5)]
    assert not is_subalgebra(B3, Subspace.from_rows([e[0], e[1]]))


@given(st.lists(st.lists(st.floats(-5, 5), min_size=4, max_size=4), min_size=1, max_size=3))
def test_orthonormal_representative(rows):
    S = Subspace.from_rows(rows)
    assert np.allclose(S.basis @ S.basis.T, np.eye(S.dim), atol=1e-12)
