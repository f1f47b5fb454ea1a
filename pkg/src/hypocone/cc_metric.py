"""Carnot-Caratheodory distance estimates by direct transcription.

Controls are piecewise constant on a uniform partition of [0, 1].  The state
equation x' = sum_i u_i X_i(x) is integrated with classical RK4, and the
gradient of the objective is obtained by differentiating the discrete RK4
map backwards (discrete adjoint), so the optimizer sees exact gradients of
what is actually integrated.

Every distance returned here is an upper-bound estimate: the length of a
horizontal path whose endpoint misses the target by the reported residual.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numba
import numpy as np
import scipy.optimize

from .frame_model import Frame, _compile, left_invariant_frame, symbolic_bch
from .grassmann import Subspace
from .lie_core import HallBasis, dilate

__all__ = [
    "ControlPath",
    "DistanceEstimate",
    "SolverOptions",
    "ChartExitError",
    "NonConvergedError",
    "horizontal_flow",
    "flow_field",
    "path_length",
    "cc_distance",
    "group_cc_distance",
    "cone_convergence_check",
]



class ChartExitError(RuntimeError):
    def __init__(self, time: float, point):
        super().__init__(f"trajectory left the chart at time {time:.6g} near {point}")
        self.time = time
        self.point = point


class NonConvergedError(RuntimeError):
    """No restart met the endpoint tolerance; ``best`` is the incumbent."""

    def __init__(self, best: "DistanceEstimate"):
        super().__init__(
            f"no restart converged (best length {best.value:.6g}, residual {best.residual:.3g})"
        )
        self.best = best


@dataclass(frozen=True)
class ControlPath:
    controls: np.ndarray  # (steps, n)

    def __post_init__(self):
        c = np.asarray(self.controls, dtype=float)
        if c.ndim != 2 or c.shape[0] < 1:
            raise ValueError("controls must be a (steps, n) array with steps >= 1")
        if not np.all(np.isfinite(c)):
            raise ValueError("controls must be finite")
        object.__setattr__(self, "controls", c)

    @property
    def steps(self) -> int:
        return self.controls.shape[0]

    @classmethod
    def constant(cls, u: Sequence[float], steps: int = 1) -> "ControlPath":
        return cls(np.tile(np.asarray(u, dtype=float), (steps, 1)))


@dataclass(frozen=True)
class SolverOptions:
    steps: int = 64
    restarts: int = 8
    endpoint_tol: float = 1e-6
    rounds: int = 6
    penalty0: float = 10.0
    penalty_factor: float = 10.0
    substeps: int = 2
    seed: int = 0
    maxiter: int = 2000
    workers: int = 0  # 0: read HYPOCONE_THREADS, default 1


@dataclass
class DistanceEstimate:
    value: float
    path: ControlPath
    residual: float
    endpoint: np.ndarray
    converged: bool
    restarts: int
    diagnostics: dict = field(default_factory=dict)


def path_length(u: ControlPath) -> float:
    """Length of a piecewise-constant control on [0, 1]: mean of the speeds."""
    c = u.controls
    return float(np.sum(np.linalg.norm(c, axis=1)) / c.shape[0])


# -- RK4 integration -------------------------------------------------------------


def _rk4(fun, x0: np.ndarray, steps: int, substeps: int, periodic=None, box=None):
    h = 1.0 / (steps * substeps)
    x = np.array(x0, dtype=float)
    traj = [x.copy()]
    for s in range(steps):
        for _ in range(substeps):
            k1 = fun(s, x)
            k2 = fun(s, x + 0.5 * h * k1)
            k3 = fun(s, x + 0.5 * h * k2)
            k4 = fun(s, x + h * k3)
            x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(x)) or (box is not None and np.any(np.abs(x) > box)):
                raise ChartExitError((len(traj)) * h, x)
            traj.append(x.copy())
    return x, np.array(traj)


def horizontal_flow(F: Frame, x0: Sequence, u: ControlPath, substeps: int = 4, box: float | None = None):
    """Integrate x' = sum_i u_i(t) X_i(x) over [0, 1]; returns (endpoint, samples)."""
    if u.controls.shape[1] != F.n:
        raise ValueError(f"controls have {u.controls.shape[1]} channels, frame has {F.n} fields")
    NF = F.numeric
    c = u.controls

    def fun(s, x):
        return c[s] @ NF.fields(x)

    return _rk4(fun, F.check_point([float(v) for v in x0]), u.steps, substeps, box=box)


def flow_field(F: Frame, x0: Sequence, w: Sequence, steps: int = 64, box: float | None = None):
    """Time-one flow of the anchored field sum_k w_k anchor(b_k), from x0."""
    NF = F.numeric
    wv = np.array([float(v) for v in w])
    if wv.size != F.basis.dim:
        raise ValueError(f"element has {wv.size} coordinates, algebra has dimension {F.basis.dim}")

    def fun(s, x):
        return NF.anchors(x) @ wv

    return _rk4(fun, F.check_point([float(v) for v in x0]), steps, 1, box=box)


def _env_workers() -> int:
    try:
        return max(1, int(os.environ.get("HYPOCONE_THREADS", "1")))
    except ValueError:
        return 1


# -- compiled transcription kernel ---------------------------------------------


def _scalar_source(F: Frame) -> str:
    names = [f"x[{i}]" for i in range(F.m)]
    lines = ["def fields(x, out):"]
    for i, f in enumerate(F.fields):
        for a, c in enumerate(f.components):
            lines.append(f"    out[{i}, {a}] = {c.expr(names, lib='math')}")
    lines.append("def jac(x, out):")
    for i, f in enumerate(F.fields):
        for a, c in enumerate(f.components):
            for b in range(F.m):
                lines.append(f"    out[{i}, {a}, {b}] = {c.diff(b).expr(names, lib='math')}")
    return "\n".join(lines)


@lru_cache(maxsize=None)
def _kernel(source: str, m: int, n: int):
    ns = {"math": math}
    exec(source, ns)  # noqa: S102 - generated from exact polynomial data
    fields = numba.njit(nogil=True)(ns["fields"])
    jac = numba.njit(nogil=True)(ns["jac"])

    @numba.njit(nogil=True)
    def rollout(U, x0, q, lam, mu, y):
        S = U.shape[0]
        h = 1.0 / S
        hs = h / q
        Z = np.empty((S, q, 4, m))
        FF = np.empty((S, q, 4, n, m))
        JJ = np.empty((S, q, 4, n, m, m))
        k = np.zeros((4, m))
        x = x0.copy()
        for s in range(S):
            for r in range(q):
                for st in range(4):
                    z = np.empty(m)
                    for a in range(m):
                        if st == 0:
                            z[a] = x[a]
                        elif st == 3:
                            z[a] = x[a] + hs * k[2, a]
                        else:
                            z[a] = x[a] + 0.5 * hs * k[st - 1, a]
                    Z[s, r, st] = z
                    fields(z, FF[s, r, st])
                    jac(z, JJ[s, r, st])
                    for a in range(m):
                        acc = 0.0
                        for i in range(n):
                            acc += U[s, i] * FF[s, r, st, i, a]
                        k[st, a] = acc
                for a in range(m):
                    x[a] += hs / 6.0 * (k[0, a] + 2.0 * k[1, a] + 2.0 * k[2, a] + k[3, a])
        res = x - y
        energy = 0.0
        for s in range(S):
            for i in range(n):
                energy += h * U[s, i] * U[s, i]
        val = energy
        for a in range(m):
            val += lam[a] * res[a] + 0.5 * mu * res[a] * res[a]
        G = 2.0 * h * U
        lx = lam + mu * res
        w = np.array([hs / 6.0, hs / 3.0, hs / 3.0, hs / 6.0])
        g = np.zeros((4, m))
        for s in range(S - 1, -1, -1):
            for r in range(q - 1, -1, -1):
                for st in range(4):
                    for a in range(m):
                        g[st, a] = w[st] * lx[a]
                ax = lx.copy()
                for st in range(3, -1, -1):
                    adjz = np.zeros(m)
                    for i in range(n):
                        gi = 0.0
                        for a in range(m):
                            gi += FF[s, r, st, i, a] * g[st, a]
                            for b in range(m):
                                adjz[b] += U[s, i] * JJ[s, r, st, i, a, b] * g[st, a]
                        G[s, i] += gi
                    for b in range(m):
                        ax[b] += adjz[b]
                        if st == 3:
                            g[2, b] += hs * adjz[b]
                        elif st > 0:
                            g[st - 1, b] += 0.5 * hs * adjz[b]
                lx = ax
        return val, G, x

    return rollout


class _Target:
    """Endpoint target y(c), with Jacobian dy/dc, for p extra variables c."""

    def __init__(self, y: np.ndarray):
        self.p = 0
        self._y = np.asarray(y, dtype=float)

    def __call__(self, c):
        return self._y, np.zeros((self._y.size, 0))


class _CosetTarget(_Target):
    """y(c) = bch(sum_j c_j h_j, v): the orbit of exp(v) under H acting on the left."""

    def __init__(self, B: HallBasis, H: Subspace, v: Sequence):
        self.p = H.dim
        self._H = H.basis  # (p, d)
        self._v = np.array([float(x) for x in v])
        law, dlaw = _numeric_bch(B)
        self._law, self._dlaw = law, dlaw

    def __call__(self, c):
        a = c @ self._H
        z = np.concatenate([a, self._v])
        y = self._law(z)
        J = self._dlaw(z) @ self._H.T  # (d, d) @ (d, p)
        return y, J


@lru_cache(maxsize=None)
def _numeric_bch(B: HallBasis):
    law = symbolic_bch(B)
    d = B.dim
    names = [f"x{i}" for i in range(2 * d)]
    f = _compile(list(law), names)
    df = _compile([[p.diff(j) for j in range(d)] for p in law], names)
    return f, df


def _least_squares_controls(F: Frame, x: np.ndarray, y: np.ndarray, steps: int) -> np.ndarray:
    X = F.numeric.fields(x)  # (n, m)
    u, *_ = np.linalg.lstsq(X.T, y - x, rcond=None)
    return np.tile(u, (steps, 1))


def _solve(F: Frame, x0, target: _Target, opts: SolverOptions, guess=None) -> DistanceEstimate:
    NF_src = _scalar_source(F)
    rollout = _kernel(NF_src, F.m, F.n)
    x0 = np.array([float(v) for v in F.check_point(x0)])
    S, n, p = opts.steps, F.n, target.p
    y_ref, _ = target(np.zeros(p))
    scale = max(float(np.linalg.norm(y_ref - x0)), 1e-12) ** (1.0 / F.step)

    def run(r: int) -> DistanceEstimate:
        rng = np.random.default_rng(opts.seed * 1000 + r)
        if r == 0:
            U0 = guess if guess is not None else _least_squares_controls(F, x0, y_ref, S)
            U0 = U0 + 1e-3 * scale * rng.standard_normal((S, n))
        else:
            # smooth random controls: a few Fourier modes
            tt = (np.arange(S) + 0.5) / S
            U0 = np.zeros((S, n))
            for kk in range(1, 4):
                a = rng.standard_normal(n) * scale * 2.0 / kk
                b = rng.standard_normal(n) * scale * 2.0 / kk
                U0 += np.outer(np.sin(2 * np.pi * kk * tt), a) + np.outer(np.cos(2 * np.pi * kk * tt), b)
            U0 += _least_squares_controls(F, x0, y_ref, S)
        z = np.concatenate([U0.ravel(), np.zeros(p)])
        lam = np.zeros(F.m)
        mu = opts.penalty0 / max(scale, 1e-6) ** 2
        res_norm = np.inf
        for _round in range(opts.rounds):
            def fun(zz, lam=lam, mu=mu):
                U = zz[: S * n].reshape(S, n)
                c = zz[S * n:]
                y, Jy = target(c)
                val, G, xe = rollout(U, x0, opts.substeps, lam, mu, y)
                # d/dc of lam.(x - y) + mu/2 |x - y|^2 is -(lam + mu (x - y)) Jy
                gc = -(lam + mu * (xe - y)) @ Jy if p else np.zeros(0)
                return val, np.concatenate([G.ravel(), gc])

            out = scipy.optimize.minimize(
                fun, z, jac=True, method="L-BFGS-B",
                options={"maxiter": opts.maxiter, "ftol": 1e-15, "gtol": 1e-12, "maxcor": 30},
            )
            z = out.x
            U = z[: S * n].reshape(S, n)
            y, _ = target(z[S * n:])
            _, _, xe = rollout(U, x0, opts.substeps, lam, mu, y)
            resid = xe - y
            res_norm = float(np.linalg.norm(resid))
            lam = lam + mu * resid
            mu *= opts.penalty_factor
            if res_norm <= opts.endpoint_tol:
                break
        path = ControlPath(U)
        return DistanceEstimate(
            value=path_length(path), path=path, residual=res_norm, endpoint=xe,
            converged=res_norm <= opts.endpoint_tol, restarts=opts.restarts,
            diagnostics={"restart": r, "energy": float(np.sum(U**2) / S)},
        )

    workers = opts.workers or _env_workers()
    if workers > 1 and opts.restarts > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            candidates = list(ex.map(run, range(opts.restarts)))
    else:
        candidates = [run(r) for r in range(opts.restarts)]
    ok = [c for c in candidates if c.converged]
    pool = ok or candidates
    best = min(pool, key=lambda c: (c.value, c.residual, c.diagnostics["restart"]))
    best.diagnostics["values"] = [c.value for c in candidates]
    best.diagnostics["residuals"] = [c.residual for c in candidates]
    best.diagnostics["converged_restarts"] = len(ok)
    if not ok:
        raise NonConvergedError(best)
    return best


def cc_distance(F: Frame, x: Sequence, y: Sequence, opts: SolverOptions | None = None) -> DistanceEstimate:
    """Upper-bound estimate of d_CC(x, y) with endpoint residual diagnostics."""
    opts = opts or SolverOptions()
    xv = np.array([float(v) for v in F.check_point(x)])
    yv = np.array([float(v) for v in F.check_point(y)])
    if np.array_equal(xv, yv):
        path = ControlPath(np.zeros((opts.steps, F.n)))
        return DistanceEstimate(0.0, path, 0.0, xv, True, 0, {"restart": None})
    return _solve(F, xv, _Target(yv), opts)


@lru_cache(maxsize=None)
def _group_frame(B: HallBasis) -> Frame:
    return left_invariant_frame(B)


def group_cc_distance(B: HallBasis, H: Subspace | None, v: Sequence, opts: SolverOptions | None = None) -> DistanceEstimate:
    """Distance from the base point to the class of exp(v) in the homogeneous space.

    The metric is the one induced by the left-invariant frame of the
    generators.  Paths end anywhere on ``H exp(v)``: the orbit of exp(v)
    under left multiplication by H, which is the side fixed by the flows of
    a frame at a point whose stabilizer is H.  For central H both sides agree.
    """
    opts = opts or SolverOptions()
    H = H if H is not None else Subspace.zero(B.dim)
    if H.ambient != B.dim or len(v) != B.dim:
        raise ValueError("subspace / element do not match the algebra dimension")
    G = _group_frame(B)
    if H.dim == 0 and not any(float(c) for c in v):
        path = ControlPath(np.zeros((opts.steps, B.n)))
        return DistanceEstimate(0.0, path, 0.0, np.zeros(B.dim), True, 0, {"restart": None})
    if H.contains([float(c) for c in v]):
        path = ControlPath(np.zeros((opts.steps, B.n)))
        return DistanceEstimate(0.0, path, 0.0, np.zeros(B.dim), True, 0, {"restart": None})
    target = _CosetTarget(B, H, v) if H.dim else _Target(np.array([float(c) for c in v]))
    return _solve(G, np.zeros(B.dim), target, opts)


def cone_convergence_check(
    F: Frame,
    x: Sequence,
    H: Subspace,
    directions: Sequence[Sequence],
    t_grid: Sequence[float] = (0.2, 0.1, 0.05),
    opts: SolverOptions | None = None,
    noise_floor: float = 1e-4,
) -> list[dict]:
    """Compare d_CC(x, exp(anchor(alpha_t v)) x) / t with the model distance.

    One row per (direction, t).  ``decreasing`` records whether the
    residuals decreased along ``t_grid``; residuals under ``noise_floor``
    are at solver precision and count as converged.
    """
    opts = opts or SolverOptions()
    rows = []
    for vi, v in enumerate(directions):
        try:
            model = group_cc_distance(F.basis, H, v, opts).value
            model_err = None
        except NonConvergedError as exc:
            model, model_err = exc.best.value, "model-nonconverged"
        residuals = []
        for t in t_grid:
            w = dilate(F.basis, t, v)
            y, _ = flow_field(F, x, w)
            status = model_err or "ok"
            try:
                est = cc_distance(F, x, y, opts)
                d = est.value
                resid_end = est.residual
            except NonConvergedError as exc:
                d, resid_end, status = exc.best.value, exc.best.residual, "nonconverged"
            r = abs(d / t - model)
            residuals.append(r)
            rows.append(
                {
                    "direction": vi,
                    "v": [float(c) for c in v],
                    "t": float(t),
                    "rescaled_distance": d / t,
                    "model_distance": model,
                    "residual": r,
                    "endpoint_residual": resid_end,
                    "status": status,
                }
            )
        dec = all(b < a or max(a, b) < noise_floor for a, b in zip(residuals, residuals[1:]))
        for row in rows[-len(t_grid):]:
            row["decreasing"] = dec
    return rows
