"""Points of the Grassmannian of a Lie algebra, stored as row spans."""

from __future__ import annotations

from typing import Sequence

import numpy as np
import scipy.linalg

from ._exact import is_exact, rref

__all__ = ["Subspace", "grassmann_distance"]

class Subspace:
    """Span of a set of row vectors in R^d.

    ``basis`` is an orthonormal float representative (k x d).  When built
    from exact rows, ``exact`` holds the reduced row echelon form, which is
    a canonical exact representative.
    """

    __slots__ = ("ambient", "basis", "exact")

    def __init__(self, ambient: int, basis: np.ndarray, exact=None):
        self.ambient = ambient
        self.basis = basis
        self.exact = exact

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence], ambient: int | None = None, rtol: float = 1e-10):
        rows = [list(r) for r in rows]
        if ambient is None:
            if not rows:
                raise ValueError("ambient dimension needed for an empty row list")
            ambient = len(rows[0])
        if any(len(r) != ambient for r in rows):
            raise ValueError("rows have inconsistent lengths")
        if rows and all(is_exact(v) for r in rows for v in r):
            R, _ = rref(rows, ambient)
            exact = tuple(tuple(r) for r in R)
            if not exact:
                return cls.zero(ambient)
            return cls(ambient, _orthonormal(np.array([[float(v) for v in r] for r in R])), exact)
        if not rows:
            return cls.zero(ambient)
        A = np.array(rows, dtype=float)
        return cls(ambient, _orthonormal(A, rtol))

    @classmethod
    def zero(cls, ambient: int) -> "Subspace":
        return cls(ambient, np.zeros((0, ambient)), ())

    @classmethod
    def span(cls, *vectors) -> "Subspace":
        return cls.from_rows(vectors)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def codim(self) -> int:
        return self.ambient - self.dim

    def rows(self):
        """Exact rows when available, otherwise the orthonormal float rows."""
        if self.exact is not None:
            return [list(r) for r in self.exact]
        return [list(r) for r in self.basis]

    def projector(self) -> np.ndarray:
        return self.basis.T @ self.basis

    def contains(self, v: Sequence, tol: float = 1e-9) -> bool:
        if self.exact is not None and all(is_exact(x) for x in v):
            if not any(v):
                return True
            R, piv = rref([list(r) for r in self.exact] + [list(v)], self.ambient)
            return len(piv) == len(self.exact)
        w = np.asarray(v, dtype=float)
        nrm = np.linalg.norm(w)
        if nrm == 0:
            return True
        return np.linalg.norm(w - self.projector() @ w) <= tol * nrm

    def annihilation_residual(self, xi: Sequence) -> float:
        """max |xi(b)| over the orthonormal basis, relative to |xi|."""
        f = np.asarray([complex(x).real for x in xi], dtype=float)
        nrm = np.linalg.norm(f)
        if nrm == 0 or self.dim == 0:
            return 0.0
        return float(np.max(np.abs(self.basis @ f)) / nrm)

    def exact_equal(self, other: "Subspace") -> bool:
        if self.exact is None or other.exact is None:
            raise ValueError("exact comparison needs exact representatives on both sides")
        return self.ambient == other.ambient and self.exact == other.exact

    def map(self, matrix) -> "Subspace":
        """Image under a linear map given as a d x d matrix (exact when possible)."""
        rows = self.rows()
        img = [[sum(matrix[i][j] * r[j] for j in range(self.ambient)) for i in range(self.ambient)]
               for r in rows]
        return Subspace.from_rows(img, self.ambient)

    def __repr__(self):
        if self.exact is not None:
            body = [[str(v) for v in r] for r in self.exact]
        else:
            body = np.round(self.basis, 12).tolist()
        return f"Subspace(dim={self.dim}, ambient={self.ambient}, rows={body})"


def _orthonormal(A: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    d = A.shape[1]
    if A.size == 0:
        return np.zeros((0, d))
    # normalize rows first so that very unequal scales do not swamp the SVD
    norms = np.linalg.norm(A, axis=1)
    A = A[norms > 0] / norms[norms > 0, None]
    if A.size == 0:
        return np.zeros((0, d))
    _, s, vt = np.linalg.svd(A, full_matrices=False)
    k = int(np.sum(s > rtol * s[0]))
    return vt[:k]


def grassmann_distance(A: Subspace, B: Subspace) -> float:
    """Largest principal angle between two subspaces of equal dimension."""
    if A.ambient != B.ambient:
        raise ValueError(f"ambient dimensions differ: {A.ambient} vs {B.ambient}")
    if A.dim != B.dim:
        raise ValueError(f"subspace dimensions differ: {A.dim} vs {B.dim}")
    if A.dim == 0 or A.dim == A.ambient:
        return 0.0
    if A.exact is not None and B.exact is not None and A.exact == B.exact:
        return 0.0
    return float(np.max(scipy.linalg.subspace_angles(A.basis.T, B.basis.T)))
