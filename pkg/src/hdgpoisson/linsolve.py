"""Solvers for the condensed symmetric positive-definite trace system."""
from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

log = logging.getLogger(__name__)

PCG_THRESHOLD = 200_000


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, iterations, residual):
        super().__init__(f"PCG stopped after {iterations} iterations, relative residual {residual:.3e}")
        self.iterations = iterations
        self.residual = residual


def _as_csc(A):
    A = sp.csc_matrix(A, dtype=float)
    if A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    return A


def solve_direct(A, b) -> np.ndarray:
    """Sparse symmetric LDL^T-style solve with a minimum-degree ordering.

    SuperLU runs in symmetric mode without row pivoting, so its U-diagonal are the
    pivots of a symmetric factorization; any non-positive pivot is rejected.
    """
    A = _as_csc(A)
    b = np.asarray(b, dtype=float)
    if A.shape[0] == 0:
        return np.zeros(0)
    lu = splu(
        A, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
        options=dict(SymmetricMode=True),
    )
    piv = lu.U.diagonal()
    if np.any(piv <= 0) or np.any(lu.perm_r != lu.perm_c):
        raise NotPositiveDefiniteError(f"non-positive pivot {piv.min():.3e}")
    x = lu.solve(b)
    bnorm = np.linalg.norm(b)
    if bnorm > 0 and np.linalg.norm(A @ x - b) > 1e-12 * bnorm:
        x += lu.solve(b - A @ x)
    return x


def pcg(A, b, tol: float = 1e-11, max_iter: int | None = None, x0=None):
    """Jacobi-preconditioned CG; returns ``(x, iterations)``.

    Stops when ``||b - A x|| <= tol * ||b||``.
    """
    A = sp.csr_matrix(A, dtype=float)
    b = np.asarray(b, dtype=float)
    n = len(b)
    max_iter = 10 * n if max_iter is None else max_iter
    bnorm = np.linalg.norm(b)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    if bnorm == 0:
        return np.zeros(n), 0
    diag = A.diagonal()
    if np.any(diag <= 0):
        raise NotPositiveDefiniteError("non-positive diagonal entry")
    dinv = 1.0 / diag
    r = b - A @ x
    z = dinv * r
    p = z.copy()
    rz = r @ z
    for it in range(1, max_iter + 1):
        Ap = A @ p
        pAp = p @ Ap
        if pAp <= 0:
            raise NotPositiveDefiniteError("matrix is not positive definite")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        res = np.linalg.norm(r) / bnorm
        if res <= tol:
            return x, it
        z = dinv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise ConvergenceError(max_iter, res)


def solve_pcg(A, b, tol: float = 1e-11, max_iter: int | None = None) -> np.ndarray:
    return pcg(A, b, tol, max_iter)[0]


def solve(A, b, method: str = "auto", tol: float = 1e-11, threshold: int = PCG_THRESHOLD) -> np.ndarray:
    """Direct solve below ``threshold`` unknowns, PCG above (``method="auto"``)."""
    if method == "auto":
        method = "direct" if A.shape[0] <= threshold else "pcg"
    if method == "direct":
        return solve_direct(A, b)
    if method == "pcg":
        x, it = pcg(A, b, tol)
        log.debug("pcg converged in %d iterations", it)
        return x
    raise ValueError(f"unknown solver {method!r}")
