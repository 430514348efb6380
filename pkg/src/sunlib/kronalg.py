"""Dense tensor algebra for moment arrays.

All higher-order moments are stored as matrices in the column-major ``vec``
convention: for a p-vector X, ``mu3 = E[vec(X X^T) X^T]`` has shape (p*p, p)
and ``mu4 = E[vec(X X^T) vec(X X^T)^T]`` has shape (p*p, p*p).
"""
from __future__ import annotations

import numpy as np

from .errors import NotPositiveDefinite, ShapeMismatch


def vec(M):
    """Stack the columns of ``M`` into a single vector."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return M.reshape(-1, order="F")


def unvec(v, rows, cols=None):
    cols = rows if cols is None else cols
    return np.asarray(v, dtype=float).reshape((rows, cols), order="F")


def kron(A, B):
    return np.kron(np.atleast_2d(A), np.atleast_2d(B))


def commutation_permutation(p: int, q: int) -> np.ndarray:
    """Index map ``perm`` with ``(K_pq @ v)[k] == v[perm[k]]``."""
    if p < 1 or q < 1:
        raise ValueError("commutation matrix needs p, q >= 1")
    # vec(A) for A p x q has A[i, j] at i + j*p; vec(A^T) has it at j + i*q
    i, j = np.meshgrid(np.arange(p), np.arange(q), indexing="ij")
    perm = np.empty(p * q, dtype=np.intp)
    perm[(j + i * q).ravel()] = (i + j * p).ravel()
    return perm


def commutation_matrix(p: int, q: int | None = None) -> np.ndarray:
    """The pq x pq permutation matrix K_pq with K_pq vec(A) = vec(A^T)."""
    q = p if q is None else q
    perm = commutation_permutation(p, q)
    K = np.zeros((p * q, p * q))
    K[np.arange(p * q), perm] = 1.0
    return K


def sym_part(M):
    return 0.5 * (M + M.T)


def is_symmetric(M, tol=1e-10) -> bool:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(M))))
    return bool(np.max(np.abs(M - M.T)) <= tol * scale)


def is_positive_definite(M, rel_tol=1e-12) -> bool:
    M = np.asarray(M, dtype=float)
    if not is_symmetric(M):
        return False
    w = np.linalg.eigvalsh(sym_part(M))
    return bool(w[0] > rel_tol * max(w[-1], 0.0)) and bool(w[-1] > 0)


def sym_sqrt(M):
    """Unique symmetric positive-definite square root via eigendecomposition."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != M.shape[1]:
        raise ShapeMismatch(f"sym_sqrt needs a square matrix, got {M.shape}")
    if not is_symmetric(M, 1e-10):
        raise NotPositiveDefinite("matrix is not symmetric")
    w, V = np.linalg.eigh(sym_part(M))
    if w[-1] <= 0 or w[0] <= 1e-12 * w[-1]:
        raise NotPositiveDefinite(f"eigenvalues {w} not positive")
    S = (V * np.sqrt(w)) @ V.T
    return sym_part(S)


def sym_inv_sqrt(M):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    w, V = np.linalg.eigh(sym_part(M))
    if w[-1] <= 0 or w[0] <= 1e-12 * w[-1]:
        raise NotPositiveDefinite(f"eigenvalues {w} not positive")
    return sym_part((V / np.sqrt(w)) @ V.T)
