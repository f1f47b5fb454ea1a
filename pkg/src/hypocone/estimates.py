"""Finite-dimensional probes of the maximal L2 estimate on the torus.

Operators are assembled on the Fourier modes (k1, k2), |k_i| <= K.  A word
is first applied on a band wide enough to hold every intermediate mode, and
the result is compressed onto the K band ("project" spillover policy); the
discarded out-of-band part is reported as the spillover norm.

The constants computed here are a necessary manifestation of the estimate
at finite K, not the estimate itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .frame_model import Frame, torus_grushin_frame
from .poly import Poly
from .symbols import NCPoly

__all__ = [
    "REPORT_HEADER",
    "TorusModel",
    "OperatorMatrix",
    "assemble",
    "best_constant",
    "growth_report",
    "GrowthReport",
    "BOUNDED_SLOPE",
    "GROWING_SLOPE",
]

REPORT_HEADER = (
    "finite-K check of a necessary manifestation of the maximal estimate; "
    "it does not prove or refute the estimate itself"
)
BOUNDED_SLOPE = 0.05
GROWING_SLOPE = 0.3


@dataclass(frozen=True)
class TorusModel:
    frame: Frame = field(default_factory=torus_grushin_frame)

    def __post_init__(self):
        F = self.frame
        if not all(F.periodic):
            raise ValueError("the torus model needs a chart periodic in every variable")
        for f in F.fields:
            for c in f.components:
                _check_trig(c)


def _check_trig(c: Poly):
    for (e, _, _) in c.terms:
        if any(e):
            raise ValueError(f"coefficient {c} is not a trigonometric polynomial")


@dataclass
class OperatorMatrix:
    matrix: sp.csr_matrix
    K: int
    spillover: float
    policy: str = "project"

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


class _Modes:
    def __init__(self, m: int, K: int):
        self.m, self.K = m, K
        grids = np.meshgrid(*[np.arange(-K, K + 1)] * m, indexing="ij")
        self.k = np.stack([g.ravel() for g in grids], axis=1)  # (size, m)
        self.size = self.k.shape[0]

    def index(self, k: np.ndarray) -> np.ndarray:
        """Flat index of modes (rows of k); -1 when out of band."""
        ok = np.all(np.abs(k) <= self.K, axis=1)
        idx = np.zeros(k.shape[0], dtype=np.int64)
        w = 2 * self.K + 1
        for a in range(self.m):
            idx = idx * w + (k[:, a] + self.K)
        return np.where(ok, idx, -1)


def _multiplier(modes: _Modes, c: Poly) -> sp.csr_matrix:
    """Multiplication by a trig polynomial: e^{i h.x} shifts mode k to k + h."""
    _check_trig(c)
    rows, cols, vals = [], [], []
    src = np.arange(modes.size)
    for (_, h, phase), coef in c.terms.items():
        a = complex(coef)
        hv = np.array(h)
        if not any(h):
            parts = [(hv, a)]  # constant term is stored with phase cos
        elif phase == "cos":
            parts = [(hv, a / 2), (-hv, a / 2)]
        else:
            parts = [(hv, a / 2j), (-hv, -a / 2j)]
        for shift, val in parts:
            dst = modes.index(modes.k + shift)
            ok = dst >= 0
            rows.append(dst[ok])
            cols.append(src[ok])
            vals.append(np.full(ok.sum(), val, dtype=complex))
    if not rows:
        return sp.csr_matrix((modes.size, modes.size), dtype=complex)
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(modes.size, modes.size))


def _field_matrix(modes: _Modes, F: Frame, j: int) -> sp.csr_matrix:
    out = sp.csr_matrix((modes.size, modes.size), dtype=complex)
    for a, c in enumerate(F.fields[j].components):
        if not c:
            continue
        deriv = sp.diags(1j * modes.k[:, a].astype(complex))
        out = out + _multiplier(modes, c) @ deriv
    return out.tocsr()


def _reach(c: Poly) -> int:
    return max((max(abs(v) for v in h) for (_, h, _) in c.terms), default=0)


def assemble(T: TorusModel, P: NCPoly, K: int) -> OperatorMatrix:
    """Galerkin matrix of P(X_1, ..., X_n) on the modes |k_i| <= K."""
    F = T.frame
    if P.m != F.m or P.n != F.n:
        raise ValueError("operator does not match the torus frame")
    if K < 1:
        raise ValueError("cutoff K must be at least 1")
    for c, _ in P.items():
        _check_trig(c)
    field_reach = max(_reach(c) for f in F.fields for c in f.components)
    word_len = max((len(w) for w in P.terms), default=0)
    coef_reach = max((_reach(c) for c, _ in P.items()), default=0)
    L = K + field_reach * word_len + coef_reach
    big = _Modes(F.m, L)
    small = _Modes(F.m, K)
    gens = [_field_matrix(big, F, j) for j in range(F.n)]
    total = sp.csr_matrix((big.size, big.size), dtype=complex)
    for c, w in P.items():
        M = _multiplier(big, c)
        for j in w:
            M = M @ gens[j]
        total = total + M
    inner = big.index(small.k)  # positions of the K band inside the wide band
    cols = total[:, inner]
    A = cols[inner, :].tocsr()
    full = sp.linalg.norm(cols) if cols.nnz else 0.0
    kept = sp.linalg.norm(A) if A.nnz else 0.0
    spill = math.sqrt(max(full**2 - kept**2, 0.0)) / full if full > 0 else 0.0
    return OperatorMatrix(A, K, spill)


def best_constant(T: TorusModel, P: NCPoly, D: NCPoly, K: int) -> float:
    """max over f of |P f| / sqrt(|D f|^2 + |f|^2) on the truncated space.

    The largest generalized singular value of (P, [D; I]), computed block by
    block over the connected components of the joint sparsity pattern.
    """
    Pm = assemble(T, P, K).matrix
    Dm = assemble(T, D, K).matrix
    A = (Pm.conj().T @ Pm).tocsr()
    Bq = (Dm.conj().T @ Dm + sp.identity(Pm.shape[0], dtype=complex, format="csr")).tocsr()
    pattern = (abs(A) + abs(Bq)).tocsr()
    ncomp, labels = connected_components(pattern, directed=False)
    best = 0.0
    for comp in range(ncomp):
        idx = np.flatnonzero(labels == comp)
        a = A[idx][:, idx].toarray()
        b = Bq[idx][:, idx].toarray()
        if not np.any(a):
            continue
        a = (a + a.conj().T) / 2
        b = (b + b.conj().T) / 2
        try:
            lam = scipy.linalg.eigh(a, b, eigvals_only=True, subset_by_index=[len(idx) - 1, len(idx) - 1])
        except np.linalg.LinAlgError as exc:
            cond = np.linalg.cond(b)
            raise np.linalg.LinAlgError(f"generalized eigenproblem failed (condition {cond:.3g})") from exc
        best = max(best, float(lam[-1]))
    return math.sqrt(max(best, 0.0))


@dataclass
class GrowthReport:
    Ks: list[int]
    constants: list[float]
    spillover: list[float]
    slope: float
    classification: str
    header: str = REPORT_HEADER

    def rows(self) -> list[dict]:
        return [
            {"K": k, "C_K": c, "spillover": s, "slope": self.slope, "classification": self.classification}
            for k, c, s in zip(self.Ks, self.constants, self.spillover)
        ]


def classify_slope(slope: float) -> str:
    if slope < BOUNDED_SLOPE:
        return "bounded"
    if slope > GROWING_SLOPE:
        return "growing"
    return "inconclusive"


def fit_slope(Ks: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of log(value) against log(K)."""
    if len(Ks) < 3:
        raise ValueError("a growth fit needs at least three cutoffs")
    x = np.log(np.asarray(Ks, dtype=float))
    y = np.log(np.maximum(np.asarray(values, dtype=float), 1e-300))
    return float(np.polyfit(x, y, 1)[0])


def growth_report(T: TorusModel, P: NCPoly, D: NCPoly, Ks: Sequence[int] = (8, 16, 24, 32)) -> GrowthReport:
    Ks = [int(k) for k in Ks]
    if len(Ks) < 3:
        raise ValueError("growth_report needs at least three cutoffs")
    consts = [best_constant(T, P, D, k) for k in Ks]
    spill = [max(assemble(T, P, k).spillover, assemble(T, D, k).spillover) for k in Ks]
    slope = fit_slope(Ks, consts)
    return GrowthReport(Ks, consts, spill, slope, classify_slope(slope))
