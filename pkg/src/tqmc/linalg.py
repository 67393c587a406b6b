"""Dense small-matrix kernels: triangular ops, Cholesky, symmetric eigen.

Thin wrappers over LAPACK via numpy, with deterministic conventions
(descending eigenvalues, largest-magnitude eigenvector component positive)
so downstream artifacts are reproducible across platforms.
"""

from __future__ import annotations

import numpy as np


class LinalgError(ValueError):
    pass


def symmetrize(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise LinalgError("expected a square matrix")
    return 0.5 * (a + a.T)


def tri_matvec(L: np.ndarray, x: np.ndarray) -> np.ndarray:
    """y_i = sum_{j<=i} L_ij x_j; strictly upper part of L is ignored."""
    L = np.asarray(L, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if L.shape[0] != L.shape[1] or L.shape[1] != x.shape[-1]:
        raise LinalgError("dimension mismatch")
    return np.tril(L) @ x


def tri_solve(L: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Solve L x = y by forward substitution (L lower-triangular).

    ``y`` may be a vector or an (n, d) batch of right-hand sides stored
    row-wise; the solve is applied to each row.
    """
    L = np.asarray(L, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    d = L.shape[0]
    if np.any(np.abs(np.diag(L)) == 0.0):
        raise LinalgError("singular triangular matrix")
    batched = y.ndim == 2
    rhs = y if batched else y[None, :]
    x = np.zeros_like(rhs)
    for i in range(d):
        x[:, i] = (rhs[:, i] - x[:, :i] @ L[i, :i]) / L[i, i]
    return x if batched else x[0]


def cholesky(a: np.ndarray) -> np.ndarray:
    """Lower-triangular factor L with L L^T = a; raises on non-PD input."""
    a = symmetrize(a)
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise LinalgError("matrix is not positive definite") from exc


def sym_eigen(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and orthogonal eigenvectors of a symmetric matrix.

    Column signs are fixed so the largest-magnitude component of each
    eigenvector is positive.
    """
    a = symmetrize(a)
    if a.shape[0] > 2000:
        raise LinalgError("matrix too large")
    vals, vecs = np.linalg.eigh(a)
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = vecs[:, order]
    for k in range(vecs.shape[1]):
        i = np.argmax(np.abs(vecs[:, k]))
        if vecs[i, k] < 0:
            vecs[:, k] = -vecs[:, k]
    return vals, vecs


def gram_schmidt_complete(v_r: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    """Orthonormalize ``candidates`` against v_r (modified Gram-Schmidt).

    Returns a matrix whose columns extend v_r to a full orthonormal basis.
    """
    d, r = v_r.shape
    basis = [v_r[:, k] for k in range(r)]
    extra = []
    for k in range(candidates.shape[1]):
        w = candidates[:, k].astype(np.float64).copy()
        for b in basis:
            w -= (b @ w) * b
        for b in basis:  # second pass for numerical orthogonality
            w -= (b @ w) * b
        nrm = np.linalg.norm(w)
        if nrm > 1e-10:
            w /= nrm
            basis.append(w)
            extra.append(w)
        if len(basis) == d:
            break
    if len(basis) != d:
        raise LinalgError("could not complete orthonormal basis")
    return np.column_stack(extra) if extra else np.zeros((d, 0))
