"""Direct sparse complex solver (LU with partial pivoting via SuperLU).

The matrices produced by the assembly are complex symmetric (not Hermitian),
so a general sparse LU is used. The factor/backsolve split lets callers
reuse one factorization for several right-hand sides.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = [
    "SparseComplexMatrix",
    "Factorization",
    "SingularMatrixError",
    "factor",
    "backsolve",
]


class SingularMatrixError(RuntimeError):
    """Raised when the factorization hits an (almost) exactly singular pivot."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


@dataclass
class SparseComplexMatrix:
    """Square sparse complex matrix in CSR form.

    `symmetric` records (but does not enforce) structural/value symmetry;
    the direct solver does not rely on it.
    """

    csr: sp.csr_matrix
    symmetric: bool = False

    @staticmethod
    def from_triplets(n: int, rows, cols, vals, symmetric: bool = False):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.complex128)
        if len(rows) != len(cols) or len(rows) != len(vals):
            raise ValueError("triplet arrays must have equal length")
        if len(rows) and (rows.min() < 0 or rows.max() >= n or cols.min() < 0 or cols.max() >= n):
            raise ValueError("triplet index out of range")
        mat = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        mat.sum_duplicates()
        return SparseComplexMatrix(csr=mat, symmetric=symmetric)

    @staticmethod
    def from_csr(mat, symmetric: bool = False):
        return SparseComplexMatrix(
            csr=sp.csr_matrix(mat, dtype=np.complex128), symmetric=symmetric
        )

    @property
    def shape(self):
        return self.csr.shape

    @property
    def n(self) -> int:
        return self.csr.shape[0]


@dataclass
class Factorization:
    lu: spla.SuperLU
    n: int


def factor(matrix: SparseComplexMatrix) -> Factorization:
    """Sparse LU factorization; raises SingularMatrixError on singular pivots."""
    n = matrix.n
    if n == 0:
        return Factorization(lu=None, n=0)
    try:
        lu = spla.splu(matrix.csr.tocsc())
    except RuntimeError as exc:
        msg = str(exc)
        index = None
        # SuperLU reports "Factor is exactly singular" with a pivot column.
        for tok in msg.replace("(", " ").replace(")", " ").split():
            if tok.isdigit():
                index = int(tok)
                break
        raise SingularMatrixError(f"singular matrix: {msg}", index=index) from exc
    return Factorization(lu=lu, n=n)


def backsolve(fact: Factorization, rhs: np.ndarray) -> np.ndarray:
    """Solve A x = rhs using a prior factorization."""
    rhs = np.asarray(rhs, dtype=np.complex128)
    if rhs.shape[0] != fact.n:
        raise ValueError(f"rhs length {rhs.shape[0]} != matrix size {fact.n}")
    if fact.n == 0:
        return np.zeros_like(rhs)
    x = fact.lu.solve(rhs)
    if not np.all(np.isfinite(x.real)) or not np.all(np.isfinite(x.imag)):
        raise SingularMatrixError("non-finite solution from backsolve")
    return x
