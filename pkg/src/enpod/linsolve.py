"""Direct factorizations with factorize-once / solve-many semantics.

The sparse path wraps SuperLU with a fill-reducing column ordering; the dense
path is LU with partial pivoting for the small reduced systems.  solve_many
is literally a loop of single solves so that batch results are bitwise equal
to one-at-a-time results.
"""

import warnings

import numpy as np
from scipy import linalg as dla
from scipy import sparse
from scipy.sparse import linalg as sla

from .errors import DimensionError, SingularMatrixError


class SparseFactorization:
    def __init__(self, lu, shape):
        self._lu = lu
        self.shape = shape

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        if b.shape != (self.shape[0],):
            raise DimensionError(
                f"rhs of shape {b.shape} does not match system size {self.shape[0]}")
        x = self._lu.solve(b)
        if not np.all(np.isfinite(x)):
            raise SingularMatrixError("factorization produced non-finite solution")
        return x


class DenseFactorization:
    def __init__(self, lu, piv, shape):
        self._lu = lu
        self._piv = piv
        self.shape = shape

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        if b.shape != (self.shape[0],):
            raise DimensionError(
                f"rhs of shape {b.shape} does not match system size {self.shape[0]}")
        return dla.lu_solve((self._lu, self._piv), b)


def sparse_factorize(A):
    """LU-factorize a square sparse matrix for repeated solves."""
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"matrix of shape {A.shape} is not square")
    try:
        lu = sla.splu(sparse.csc_matrix(A))
    except RuntimeError as exc:
        raise SingularMatrixError(str(exc)) from exc
    return SparseFactorization(lu, A.shape)


def dense_factorize(A):
    """LU with partial pivoting of a small dense matrix."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"matrix of shape {A.shape} is not square")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", dla.LinAlgWarning)
            lu, piv = dla.lu_factor(A)
    except (ValueError, dla.LinAlgError) as exc:
        raise SingularMatrixError(str(exc)) from exc
    diag = np.abs(np.diag(lu))
    if not np.all(np.isfinite(lu)) or np.any(diag == 0.0):
        bad = int(np.argmin(diag))
        raise SingularMatrixError("zero pivot encountered", pivot=bad)
    return DenseFactorization(lu, piv, A.shape)


def solve_many(factorization, rhs_list):
    """Solve one factorized system for several right-hand sides, preserving
    order; each result is bitwise identical to a standalone solve."""
    return [factorization.solve(b) for b in rhs_list]
