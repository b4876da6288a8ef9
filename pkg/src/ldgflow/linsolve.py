"""Sparse linear algebra for the implicit substeps: GMRES and ILU(0).

Matrices are scipy CSR (compressed row storage).  GMRES is restarted and
right-preconditioned, so convergence is measured on the true residual
||b - Ax|| <= rtol * ||b||.  ILU(0) keeps exactly the sparsity pattern of A
and is applied by forward/backward substitution.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from numba import njit

SparseMatrix = sp.csr_matrix


class ZeroPivotError(RuntimeError):
    """ILU(0) hit a zero pivot: singular block or assembly bug."""


@dataclass
class SolverReport:
    iterations: int
    residual: float      # final relative residual
    converged: bool


@njit(cache=True)
def _ilu0_factor(n, indptr, indices, data, diag_pos):
    # in-place IKJ ILU(0); data holds L (strict lower, unit diag) and U
    pos = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        row_start, row_end = indptr[i], indptr[i + 1]
        for p in range(row_start, row_end):
            pos[indices[p]] = p
        for p in range(row_start, row_end):
            k = indices[p]
            if k >= i:
                break
            dk = data[diag_pos[k]]
            if dk == 0.0:
                return k
            lik = data[p] / dk
            data[p] = lik
            for q in range(diag_pos[k] + 1, indptr[k + 1]):
                j = indices[q]
                pj = pos[j]
                if pj >= 0:
                    data[pj] -= lik * data[q]
        for p in range(row_start, row_end):
            pos[indices[p]] = -1
        if data[diag_pos[i]] == 0.0:
            return i
    return -1


@njit(cache=True)
def _ilu0_solve(n, indptr, indices, data, diag_pos, b, x):
    # forward: L y = b (unit diagonal)
    for i in range(n):
        s = b[i]
        for p in range(indptr[i], diag_pos[i]):
            s -= data[p] * x[indices[p]]
        x[i] = s
    # backward: U x = y
    for i in range(n - 1, -1, -1):
        s = x[i]
        for p in range(diag_pos[i] + 1, indptr[i + 1]):
            s -= data[p] * x[indices[p]]
        x[i] = s / data[diag_pos[i]]


class Ilu0:
    """Incomplete LU factorization with zero fill-in."""

    def __init__(self, A):
        A = sp.csr_matrix(A)
        A.sort_indices()
        n = A.shape[0]
        self.n = n
        self.indptr = A.indptr.astype(np.int64)
        self.indices = A.indices.astype(np.int64)
        self.data = A.data.astype(np.float64).copy()
        diag_pos = np.full(n, -1, dtype=np.int64)
        for i in range(n):
            sl = self.indices[self.indptr[i]:self.indptr[i + 1]]
            hit = np.searchsorted(sl, i)
            if hit == len(sl) or sl[hit] != i:
                raise ZeroPivotError(f"missing diagonal entry in row {i}")
            diag_pos[i] = self.indptr[i] + hit
        self.diag_pos = diag_pos
        bad = _ilu0_factor(n, self.indptr, self.indices, self.data, diag_pos)
        if bad >= 0:
            raise ZeroPivotError(f"zero pivot in row {bad}")

    def solve(self, b):
        x = np.empty_like(b, dtype=np.float64)
        _ilu0_solve(self.n, self.indptr, self.indices, self.data,
                    self.diag_pos, np.asarray(b, dtype=np.float64), x)
        return x

    __call__ = solve


def ilu0(A):
    return Ilu0(A)


def gmres(A, b, precond=None, rtol=1e-10, restart=60, maxiter=2000, x0=None):
    """Restarted right-preconditioned GMRES.

    A may be a scipy sparse matrix or any object with a matvec-compatible
    `@`; precond is applied as an approximate inverse (callable).  Returns
    (x, SolverReport); non-convergence is reported, not raised.
    """
    b = np.asarray(b, dtype=np.float64)
    n = b.shape[0]
    matvec = (lambda v: A @ v) if not callable(A) else A
    M = precond if precond is not None else (lambda v: v)

    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), SolverReport(0, 0.0, True)
    tol_abs = rtol * bnorm

    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    r = b - matvec(x) if x.any() else b.copy()
    rnorm = np.linalg.norm(r)
    total_it = 0

    V = np.empty((restart + 1, n))
    Z = np.empty((restart, n))
    H = np.zeros((restart + 1, restart))

    while total_it < maxiter and rnorm > tol_abs:
        V[0] = r / rnorm
        cs = np.zeros(restart)
        sn = np.zeros(restart)
        g = np.zeros(restart + 1)
        g[0] = rnorm
        j = 0
        while j < restart and total_it < maxiter:
            Z[j] = M(V[j])
            w = matvec(Z[j])
            # modified Gram-Schmidt
            for i in range(j + 1):
                H[i, j] = w @ V[i]
                w -= H[i, j] * V[i]
            H[j + 1, j] = np.linalg.norm(w)
            if H[j + 1, j] > 0.0:
                V[j + 1] = w / H[j + 1, j]
            # apply stored Givens rotations, then form the new one
            for i in range(j):
                t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = t
            denom = np.hypot(H[j, j], H[j + 1, j])
            if denom == 0.0:
                cs[j], sn[j] = 1.0, 0.0
            else:
                cs[j], sn[j] = H[j, j] / denom, H[j + 1, j] / denom
            H[j, j] = denom
            H[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            total_it += 1
            j += 1
            if abs(g[j]) <= tol_abs or (j < restart and H[j, j - 1] == 0.0):
                break
        # solve the small triangular system and update x
        y = np.zeros(j)
        for i in range(j - 1, -1, -1):
            y[i] = (g[i] - H[i, i + 1:j] @ y[i + 1:j]) / H[i, i]
        x = x + y @ Z[:j]
        r = b - matvec(x)
        rnorm = np.linalg.norm(r)

    rel = rnorm / bnorm
    return x, SolverReport(total_it, rel, bool(rnorm <= tol_abs))
