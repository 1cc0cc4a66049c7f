"""Regularized symmetric generalized eigenproblem A v = lambda (B + eps I) v.

The problem is reduced through a Cholesky factorization B + eps I = L L^T to
a standard symmetric one, L^-1 A L^-T u = lambda u.  The reduced problem is
solved by cyclic Jacobi rotations up to ``JACOBI_MAX_N``; above that size the
same contract is met by LAPACK's symmetric solver, which keeps desk-scale
alignment fits inside their runtime budgets.  Both paths return eigenpairs
sorted by ascending eigenvalue, normalized so v^T (B + eps I) v = 1, with the
sign fixed by making each vector's largest-magnitude component positive.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

from .errors import CholeskyFailure, DimensionMismatch, NotSymmetric

JACOBI_MAX_N = 128
JACOBI_SWEEP_CAP = 60


def _off_diagonal_norm(a: np.ndarray) -> float:
    return float(np.sqrt(np.sum(a ** 2) - np.sum(np.diag(a) ** 2)))


def jacobi_eigh(c: np.ndarray, tol: float = 1e-12,
                sweep_cap: int = JACOBI_SWEEP_CAP) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic-by-rows Jacobi diagonalization of a symmetric matrix.

    Sweeps run in fixed (p, q) order until the off-diagonal Frobenius norm
    drops below ``tol`` (scaled by the matrix norm), so results are
    deterministic.  Returns (eigenvalues, eigenvector columns), unsorted.
    """
    a = np.array(c, dtype=np.float64)
    n = a.shape[0]
    v = np.eye(n)
    if n == 1:
        return np.diag(a).copy(), v
    scale = max(1.0, float(np.linalg.norm(a)))
    for _ in range(sweep_cap):
        if _off_diagonal_norm(a) < tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau)) \
                    if tau != 0.0 else 1.0
                cth = 1.0 / np.sqrt(1.0 + t * t)
                sth = t * cth
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = cth * rp - sth * rq
                a[q, :] = sth * rp + cth * rq
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = cth * cp - sth * cq
                a[:, q] = sth * cp + cth * cq
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = cth * vp - sth * vq
                v[:, q] = sth * vp + cth * vq
    return np.diag(a).copy(), v


def _check_square_symmetric(m: np.ndarray, name: str) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {m.shape}")
    tol = 1e-10 * max(1.0, float(np.abs(m).max()))
    if float(np.abs(m - m.T).max()) > tol:
        raise NotSymmetric(f"{name} is not symmetric within tolerance")
    return m


def solve_generalized_eig(a: np.ndarray, b: np.ndarray, eps: float = 0.0,
                          method: str = "auto") -> tuple[np.ndarray, np.ndarray]:
    """All eigenpairs of A v = lambda (B + eps I) v, ascending by eigenvalue.

    Parameters
    ----------
    a, b : symmetric matrices of the same size (B + eps I positive definite).
    eps : ridge added to B before factorization.
    method : 'jacobi', 'lapack', or 'auto' (jacobi up to JACOBI_MAX_N).

    Returns (eigenvalues, eigenvectors); eigenvectors are columns satisfying
    v^T (B + eps I) v = 1.  Raises CholeskyFailure when B + eps I is not
    positive definite (the ridge is too small).
    """
    a = _check_square_symmetric(a, "A")
    b = _check_square_symmetric(b, "B")
    if a.shape != b.shape:
        raise DimensionMismatch(f"A {a.shape} and B {b.shape} differ in size")
    n = a.shape[0]
    b_reg = b + eps * np.eye(n) if eps != 0.0 else b
    try:
        chol = np.linalg.cholesky(b_reg)
    except np.linalg.LinAlgError as e:
        raise CholeskyFailure(
            f"B + {eps} I is not positive definite; increase the regularization") from e

    # C = L^-1 A L^-T, symmetrized against roundoff.
    y = solve_triangular(chol, a, lower=True)
    c = solve_triangular(chol, y.T, lower=True).T
    c = 0.5 * (c + c.T)

    if method == "jacobi" or (method == "auto" and n <= JACOBI_MAX_N):
        vals, units = jacobi_eigh(c)
    elif method in ("lapack", "auto"):
        vals, units = np.linalg.eigh(c)
    else:
        raise ValueError(f"unknown method {method!r}")

    order = np.argsort(vals, kind="stable")
    vals = vals[order]
    vecs = solve_triangular(chol.T, units[:, order], lower=False)

    # Normalize against B+epsI and fix signs deterministically.
    bnorm = np.sqrt(np.einsum("ik,ij,jk->k", vecs, b_reg, vecs))
    bnorm[bnorm == 0.0] = 1.0
    vecs = vecs / bnorm[None, :]
    lead = np.abs(vecs).argmax(axis=0)
    signs = np.sign(vecs[lead, np.arange(n)])
    signs[signs == 0.0] = 1.0
    vecs = vecs * signs[None, :]
    return vals, vecs


def generalized_residual(a: np.ndarray, b: np.ndarray, eps: float,
                         vals: np.ndarray, vecs: np.ndarray) -> float:
    """max_k ||A v_k - lambda_k (B + eps I) v_k||, for verification."""
    b_reg = b + eps * np.eye(b.shape[0])
    res = a @ vecs - (b_reg @ vecs) * vals[None, :]
    return float(np.linalg.norm(res, axis=0).max())
