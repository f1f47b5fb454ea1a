"""Grassmannian limits of dilated kernels and the cones built from them.

For t > 0 the rescaled kernel alpha_{1/t}(ker anchor_x) is the kernel of
``anchor_x o alpha_t``, i.e. of ``A(x) diag(t**deg)``.  Working with that
matrix (rows normalized) keeps the numerics stable as t -> 0, which is the
regime every limit below lives in.

Limits are detected on geometric sequences s_j = s0 / 2**j: successive
kernels must be Cauchy in the principal-angle metric, and a Richardson
extrapolation over three consecutive terms must agree with itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
import scipy.optimize

from ._exact import is_exact, nullspace
from ._exact import rank as exact_rank
from .frame_model import RANK_RTOL, Frame, SurjectivityError, anchor_matrix
from .grassmann import Subspace, grassmann_distance
from .lie_core import HallBasis, adjoint_matrix

__all__ = [
    "Subspace",
    "grassmann_distance",
    "DivergenceReport",
    "ApproachPath",
    "CovectorPath",
    "ConeMember",
    "ConeSample",
    "ConeSampling",
    "dilated_kernel",
    "limit_along",
    "is_subalgebra",
    "snap_rational",
    "cone_g0",
    "cached_cone",
    "hn_residual",
    "hn_membership_def2",
    "hn_sample_def1",
    "covector_path_to",
]

DEFAULT_LIMIT_TOL = 1e-8
DEFAULT_MERGE_TOL = 1e-6
DEFAULT_LAMBDAS = (0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0, 8.0, -8.0)


@dataclass
class DivergenceReport:
    """Returned instead of a limit when the sampled sequence is not Cauchy."""

    label: str
    reason: str
    scales: list[float]
    gaps: list[float]
    last: object = None

    def __bool__(self):
        return False


# -- paths ----------------------------------------------------------------------


@dataclass(frozen=True)
class ApproachPath:
    """s -> (x(s), t(s)) with t(s) > 0, x(s) -> x* and t(s) -> 0 as s -> 0."""

    point: Callable[[float], Sequence[float]]
    scale: Callable[[float], float]
    s0: float = 0.5
    label: str = "path"
    params: dict = field(default_factory=dict, compare=False)

    @classmethod
    def fixed(cls, x: Sequence, s0: float = 0.5) -> "ApproachPath":
        xv = tuple(float(v) for v in x)
        return cls(lambda s: xv, lambda s: s, s0, "fixed", {"kind": "fixed"})

    @classmethod
    def ray(cls, x: Sequence, axis: int, lam: float, power: float = 1, s0: float = 0.5) -> "ApproachPath":
        """x(s) = x* - lam * t**power * e_axis with t = s."""
        xv = np.array([float(v) for v in x])

        def point(s):
            y = xv.copy()
            y[axis] -= lam * s**power
            return y

        label = f"ray(axis={axis + 1},lambda={lam:g},power={power:g})"
        return cls(point, lambda s: s, s0, label,
                   {"kind": "ray", "axis": axis, "lambda": lam, "power": power})

    @classmethod
    def sqrt_ray(cls, x: Sequence, axis: int, sign: float = 1.0, s0: float = 0.5) -> "ApproachPath":
        """x(s) = x* + sign * sqrt(t) * e_axis: displacement dominates every power t**p, p >= 1."""
        xv = np.array([float(v) for v in x])

        def point(s):
            y = xv.copy()
            y[axis] += sign * math.sqrt(s)
            return y

        return cls(point, lambda s: s, s0, f"sqrt(axis={axis + 1},sign={sign:+g})",
                   {"kind": "sqrt", "axis": axis, "sign": sign})

    @classmethod
    def from_samples(cls, points: Sequence[Sequence[float]], scales: Sequence[float], label: str = "samples"):
        """A sampled sequence (x_j, t_j); s = 2**-j indexes the samples."""
        pts = [tuple(float(v) for v in p) for p in points]
        ts = [float(t) for t in scales]
        if len(pts) != len(ts) or not pts:
            raise ValueError("points and scales must be nonempty and of equal length")
        if any(t <= 0 for t in ts):
            raise ValueError("scales must be positive")

        def idx(s):
            return min(int(round(-math.log2(s))), len(ts) - 1)

        return cls(lambda s: pts[idx(s)], lambda s: ts[idx(s)], 1.0, label,
                   {"kind": "samples", "length": len(ts)})

    def at(self, j: int) -> tuple[np.ndarray, float]:
        s = self.s0 / 2.0**j
        t = float(self.scale(s))
        if not t > 0:
            raise ValueError(f"path {self.label}: t(s) must be positive, got {t} at s={s}")
        return np.asarray(self.point(s), dtype=float), t

    @property
    def max_terms(self) -> int | None:
        return self.params.get("length")


@dataclass(frozen=True)
class CovectorPath:
    """s -> (x(s), eta(s), t(s)) with eta(s) a cotangent vector at x(s)."""

    path: ApproachPath
    covector: Callable[[float, np.ndarray, float], Sequence[float]]
    label: str = "covector-path"


# -- kernels --------------------------------------------------------------------


def _scaled_anchor(F: Frame, x, t) -> np.ndarray:
    A = F.numeric.anchors(np.asarray(x, dtype=float))
    return A * np.array([t**d for d in F.basis.degrees])


def dilated_kernel(F: Frame, x: Sequence, t) -> Subspace:
    """alpha_{1/t}(ker anchor_x), computed as ker(anchor_x o alpha_t).

    Exact when x and t are exact and the frame has no trigonometric terms.
    """
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    x = F.check_point(x)
    d, m = F.basis.dim, F.m
    if not F.has_trig and is_exact(t) and all(is_exact(v) for v in x):
        A = anchor_matrix(F, x)
        tt = Fraction(t)
        M = [[a * tt**deg for a, deg in zip(row, F.basis.degrees)] for row in A]
        if exact_rank(M) < m:
            raise SurjectivityError(f"anchor is not surjective at {tuple(x)}")
        return Subspace.from_rows(nullspace(M, d), d) if d > m else Subspace.zero(d)
    return _float_kernel(_scaled_anchor(F, x, float(t)), x)


def _float_kernel(M: np.ndarray, x) -> Subspace:
    m, d = M.shape
    norms = np.linalg.norm(M, axis=1)
    if np.any(norms == 0):
        raise SurjectivityError(f"anchor is not surjective at {tuple(x)}")
    Mn = M / norms[:, None]
    s = np.linalg.svd(Mn, compute_uv=False)
    if s[-1] <= RANK_RTOL * s[0]:
        raise SurjectivityError(f"anchor is not surjective at {tuple(x)}")
    if d == m:
        return Subspace.zero(d)
    K = scipy.linalg.null_space(Mn)
    return Subspace(d, K.T.copy())


def _graph(U: np.ndarray, Q: np.ndarray):
    """Coordinates of span(U) in the affine chart around span(Q): W = M^-1 U, Z = W - Q."""
    M = U @ Q.T
    if np.linalg.cond(M) > 1e8:
        return None
    return np.linalg.solve(M, U) - Q


def _extrapolate(Ks: list[Subspace]) -> Subspace:
    """Richardson step on the last three terms, with the ratio estimated from the data."""
    K1, K2, K3 = Ks[-3:]
    Q = K3.basis
    Z = [_graph(K.basis, Q) for K in (K1, K2)]
    if any(z is None for z in Z):
        return K3
    Z1, Z2 = Z
    d12 = np.linalg.norm(Z1 - Z2)
    d23 = np.linalg.norm(Z2)  # Z3 = 0 in its own chart
    if d23 == 0 or d12 == 0:
        return K3
    r = d12 / d23
    if not math.isfinite(r) or r <= 1.0 + 1e-3:
        return K3
    Zs = -Z2 / (r - 1.0)
    return Subspace(K3.ambient, _orth(Q + Zs))


def _orth(A: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(A.T)
    return q.T.copy()


def limit_along(
    F: Frame,
    P: ApproachPath,
    tol: float = DEFAULT_LIMIT_TOL,
    max_halvings: int = 80,
    check_subalgebra: bool = True,
) -> Subspace | DivergenceReport:
    """Grassmannian limit of the dilated kernels along ``P``.

    Returns the extrapolated subspace once the raw kernels are Cauchy below
    ``tol`` and two successive extrapolations agree below ``tol``.
    """
    n_terms = P.max_terms or max_halvings + 1
    n_terms = min(n_terms, max_halvings + 1)
    Ks: list[Subspace] = []
    Es: list[Subspace] = []
    gaps: list[float] = []
    scales: list[float] = []
    for j in range(n_terms):
        x, t = P.at(j)
        K = _float_kernel(_scaled_anchor(F, x, t), x)
        if K.dim == 0:
            return K
        Ks.append(K)
        scales.append(t)
        Es.append(_extrapolate(Ks) if len(Ks) >= 3 else K)
        if j == 0:
            continue
        raw = grassmann_distance(Ks[-1], Ks[-2])
        gaps.append(raw)
        if raw < tol and grassmann_distance(Es[-1], Es[-2]) < tol:
            L = Es[-1]
            if check_subalgebra and not is_subalgebra(F.basis, L, tol=max(100 * tol, 1e-7)):
                raise AssertionError(f"limit along {P.label} is not a subalgebra: {L}")
            return L
    trend = "oscillating" if len(gaps) > 4 and gaps[-1] > 0.5 * max(gaps[-4:]) else "slow"
    return DivergenceReport(P.label, f"not Cauchy below {tol:g} after {len(Ks)} terms ({trend})",
                            scales, gaps, Ks[-1] if Ks else None)


def is_subalgebra(B: HallBasis, S: Subspace, tol: float = 1e-9) -> bool:
    """[S, S] is contained in S (exactly when S carries exact rows)."""
    if S.ambient != B.dim:
        raise ValueError(f"subspace lives in dimension {S.ambient}, algebra has {B.dim}")
    if S.dim <= 1:
        return True
    if S.exact is not None:
        from .lie_core import bracket

        rows = S.rows()
        for i in range(len(rows)):
            for j in range(i + 1, len(rows)):
                if not S.contains(bracket(B, rows[i], rows[j])):
                    return False
        return True
    C = B.structure_tensor()
    Q = S.basis
    br = np.einsum("ai,bj,ijk->abk", Q, Q, C)
    resid = br - br @ Q.T @ Q
    return float(np.max(np.abs(resid))) <= tol


def snap_rational(S: Subspace, tol: float = 1e-9, max_denominator: int = 1000) -> Subspace:
    """Replace a float subspace by a nearby one with small rational RREF rows, if any."""
    if S.exact is not None or S.dim == 0:
        return S
    Q = S.basis
    # reduced row echelon form in floats
    R = Q.copy()
    pivots = []
    r = 0
    for c in range(S.ambient):
        if r == R.shape[0]:
            break
        p = r + int(np.argmax(np.abs(R[r:, c])))
        if abs(R[p, c]) < 1e-8:
            continue
        R[[r, p]] = R[[p, r]]
        R[r] /= R[r, c]
        for i in range(R.shape[0]):
            if i != r:
                R[i] -= R[i, c] * R[r]
        pivots.append(c)
        r += 1
    rows = [[Fraction(float(v)).limit_denominator(max_denominator) for v in row] for row in R]
    T = Subspace.from_rows(rows, S.ambient)
    if T.dim == S.dim and grassmann_distance(S, T) < tol:
        return T
    return S


# -- sampled cones ------------------------------------------------------------------


@dataclass(frozen=True)
class ConeSampling:
    """Approach family used to sample the set of tangent-cone algebras at a point.

    ``powers=None`` uses 1 .. step-1 (at least 1).  Continuous families
    lambda = tan(theta) over each ray are scanned on ``family_grid`` points
    and refined with a bounded scalar minimizer when they are queried.
    """

    lambdas: tuple[float, ...] = DEFAULT_LAMBDAS
    powers: tuple[float, ...] | None = None
    axes: tuple[int, ...] | None = None
    include_fixed: bool = True
    include_infinite: bool = True
    merge_tol: float = DEFAULT_MERGE_TOL
    tol: float = DEFAULT_LIMIT_TOL
    family_grid: int = 41
    adjoint_samples: int = 3
    seed: int = 0


@dataclass
class ConeMember:
    subspace: Subspace
    stratum: str
    approaches: list[str]
    subalgebra: bool
    adjoint_residual: float = float("nan")


@dataclass
class ConeSample:
    point: tuple
    members: list[ConeMember]
    divergent: list[DivergenceReport]
    families: list["_Family"] = field(repr=False)
    sampling: ConeSampling = field(repr=False)

    def subspaces(self) -> list[Subspace]:
        return [mb.subspace for mb in self.members]

    def distance_to(self, S: Subspace) -> float:
        """Distance from S to the sampled cone, continuous families included."""
        best = min((grassmann_distance(S, mb.subspace) for mb in self.members), default=math.inf)
        for fam in self.families:
            if best < 1e-12:
                break
            best = min(best, fam.minimize(lambda L: grassmann_distance(S, L)))
        return best


class _Family:
    """theta -> limit along the ray with lambda = tan(theta), memoized."""

    def __init__(self, F: Frame, x, axis: int, power: float, tol: float, grid: int):
        self.F, self.x, self.axis, self.power, self.tol = F, x, axis, power, tol
        self.label = f"ray-family(axis={axis + 1},power={power:g})"
        self._cache: dict[float, Subspace | None] = {}
        h = math.pi / (grid + 1)
        self.grid = [-math.pi / 2 + h * (i + 1) for i in range(grid)]

    def __call__(self, theta: float) -> Subspace | None:
        if theta not in self._cache:
            P = ApproachPath.ray(self.x, self.axis, math.tan(theta), self.power)
            L = limit_along(self.F, P, self.tol)
            self._cache[theta] = L if isinstance(L, Subspace) else None
        return self._cache[theta]

    def minimize(self, objective: Callable[[Subspace], float]) -> float:
        vals = []
        for th in self.grid:
            L = self(th)
            vals.append(objective(L) if L is not None else math.inf)
        i = int(np.argmin(vals))
        if not math.isfinite(vals[i]) or vals[i] < 1e-14:
            return vals[i]
        lo = self.grid[max(i - 1, 0)] if i > 0 else -math.pi / 2 + 1e-9
        hi = self.grid[min(i + 1, len(self.grid) - 1)] if i < len(self.grid) - 1 else math.pi / 2 - 1e-9

        def f(th):
            L = self(th)
            return objective(L) if L is not None else math.inf

        res = scipy.optimize.minimize_scalar(f, bounds=(lo, hi), method="bounded",
                                             options={"xatol": 1e-12, "maxiter": 200})
        return float(min(vals[i], res.fun))


def cone_g0(F: Frame, x: Sequence, sampling: ConeSampling | None = None) -> ConeSample:
    """Finite sample of the tangent-cone algebras at x, with stratum labels.

    The fixed-point limit is labelled ``generic``; other limits are
    ``degenerate``.  The sample is never claimed to be exhaustive.
    """
    sp = sampling or ConeSampling()
    x = tuple(float(v) for v in F.check_point(x))
    if not check_surjective(F, x):
        raise SurjectivityError(f"anchor is not surjective at {x}")
    axes = sp.axes if sp.axes is not None else tuple(range(F.m))
    powers = sp.powers if sp.powers is not None else tuple(range(1, max(F.step, 2)))
    paths: list[ApproachPath] = []
    if sp.include_fixed:
        paths.append(ApproachPath.fixed(x))
    for a in axes:
        for p in powers:
            for lam in sp.lambdas:
                if lam == 0 and sp.include_fixed:
                    continue  # identical to the fixed path
                paths.append(ApproachPath.ray(x, a, lam, p))
        if sp.include_infinite:
            for sign in (1.0, -1.0):
                paths.append(ApproachPath.sqrt_ray(x, a, sign))
    members: list[ConeMember] = []
    divergent: list[DivergenceReport] = []
    for P in paths:
        L = limit_along(F, P, sp.tol)
        if isinstance(L, DivergenceReport):
            divergent.append(L)
            continue
        for mb in members:
            if grassmann_distance(mb.subspace, L) < sp.merge_tol:
                mb.approaches.append(P.label)
                break
        else:
            L = snap_rational(L)
            stratum = "generic" if P.params.get("kind") == "fixed" else "degenerate"
            members.append(ConeMember(L, stratum, [P.label], is_subalgebra(F.basis, L, 1e-7)))
    families = [_Family(F, x, a, p, sp.tol, sp.family_grid) for a in axes for p in powers]
    sample = ConeSample(x, members, divergent, families, sp)
    _adjoint_closure(F.basis, sample)
    return sample


@lru_cache(maxsize=256)
def cached_cone(F: Frame, x: tuple, sampling: ConeSampling | None = None) -> ConeSample:
    """Memoized cone_g0 for repeated queries at the same point."""
    return cone_g0(F, x, sampling)


def check_surjective(F: Frame, x) -> bool:
    A = F.numeric.anchors(np.asarray(x, dtype=float))
    s = np.linalg.svd(A, compute_uv=False)
    return bool(s.size and s[-1] > RANK_RTOL * s[0])


def _adjoint_closure(B: HallBasis, sample: ConeSample) -> None:
    """Residual of Ad_g(h) against the sampled cone for seeded random g."""
    rng = np.random.default_rng(sample.sampling.seed)
    gs = [rng.uniform(-1, 1, B.dim) for _ in range(sample.sampling.adjoint_samples)]
    mats = [np.array(adjoint_matrix(B, tuple(g)), dtype=float) for g in gs]
    for mb in sample.members:
        if mb.subspace.dim == 0:
            mb.adjoint_residual = 0.0
            continue
        worst = 0.0
        for A in mats:
            img = Subspace(B.dim, _orth_rows(mb.subspace.basis @ A.T))
            worst = max(worst, sample.distance_to(img))
        mb.adjoint_residual = worst


def _orth_rows(A: np.ndarray) -> np.ndarray:
    _, s, vt = np.linalg.svd(A, full_matrices=False)
    return vt[: int(np.sum(s > 1e-12 * s[0]))]


# -- Helffer-Nourrigat cone ---------------------------------------------------------


def hn_residual(F: Frame, x: Sequence, xi: Sequence, sampling: ConeSampling | None = None,
                cone: ConeSample | None = None) -> float:
    """min over sampled cone algebras h of the relative size of xi restricted to h."""
    cone = cone or cached_cone(F, tuple(float(v) for v in x), sampling)
    f = np.array([float(v) for v in xi])
    if np.linalg.norm(f) == 0:
        return 0.0
    best = min((mb.subspace.annihilation_residual(f) for mb in cone.members), default=math.inf)
    for fam in cone.families:
        if best < 1e-14:
            break
        best = min(best, fam.minimize(lambda L: L.annihilation_residual(f)))
    return best


def hn_membership_def2(F: Frame, x: Sequence, xi: Sequence, sampling: ConeSampling | None = None,
                       tol: float = 1e-6, cone: ConeSample | None = None) -> bool:
    """True iff xi annihilates some sampled cone algebra within ``tol``."""
    return hn_residual(F, x, xi, sampling, cone) <= tol


def _functional_at(F: Frame, x, eta, t) -> np.ndarray:
    return np.asarray(eta, dtype=float) @ _scaled_anchor(F, x, t)


def hn_sample_def1(F: Frame, C: CovectorPath, tol: float = DEFAULT_LIMIT_TOL,
                   max_halvings: int = 80) -> tuple | DivergenceReport:
    """Limit of eta(s) o anchor_{x(s)} o alpha_{t(s)} in the dual of the algebra."""
    P = C.path
    phis: list[np.ndarray] = []
    ext: list[np.ndarray] = []
    gaps, scales = [], []
    n_terms = min(P.max_terms or max_halvings + 1, max_halvings + 1)
    for j in range(n_terms):
        x, t = P.at(j)
        s = P.s0 / 2.0**j
        phi = _functional_at(F, x, C.covector(s, x, t), t)
        if not np.all(np.isfinite(phi)):
            return DivergenceReport(C.label, "non-finite functional", scales, gaps, phi)
        phis.append(phi)
        scales.append(t)
        if len(phis) >= 3:
            p1, p2, p3 = phis[-3:]
            d12, d23 = np.linalg.norm(p1 - p2), np.linalg.norm(p2 - p3)
            r = d12 / d23 if d23 > 0 else math.inf
            ext.append(p3 - (p2 - p3) / (r - 1.0) if math.isfinite(r) and r > 1.0 + 1e-3 else p3)
        else:
            ext.append(phi)
        if j == 0:
            continue
        scale = max(1.0, float(np.linalg.norm(phi)))
        raw = float(np.linalg.norm(phis[-1] - phis[-2]))
        gaps.append(raw)
        if raw < tol * scale and np.linalg.norm(ext[-1] - ext[-2]) < tol * scale:
            return tuple(float(v) for v in ext[-1])
    return DivergenceReport(C.label, f"functionals not Cauchy below {tol:g}", scales, gaps,
                            phis[-1] if phis else None)


def covector_path_to(F: Frame, target: Sequence, P: ApproachPath) -> CovectorPath:
    """Covector path whose composed functionals are the projections of ``target``.

    eta(s) is the least-squares solution of eta . A(x) diag(t**deg) = target,
    so the composed functional is ``target`` projected on the annihilator of
    the current dilated kernel; it converges to ``target`` whenever target
    annihilates the limit of the kernels along P.
    """
    xi = np.array([float(v) for v in target])

    def covector(s, x, t):
        M = _scaled_anchor(F, x, t)
        eta, *_ = np.linalg.lstsq(M.T, xi, rcond=None)
        return eta

    return CovectorPath(P, covector, f"attain({P.label})")
