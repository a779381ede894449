"""Cyclic Jacobi eigendecomposition for small symmetric matrices.

Covariance matrices here are at most a few hundred square (subset sizes
are capped), where Jacobi sweeps are plenty fast and rotationally exact.
"""

from __future__ import annotations

import numpy as np

DEFAULT_TOL = 1e-12
MAX_SWEEPS = 100


def jacobi_eigh(matrix: np.ndarray, tol: float = DEFAULT_TOL):
    """Eigenvalues (descending) and eigenvectors of a symmetric matrix.

    Sweeps cyclically over the upper triangle, zeroing entries with Givens
    rotations until every off-diagonal magnitude falls below
    ``tol * frobenius_norm``. Returns (values, vectors) with vectors in
    columns, so matrix == V @ diag(values) @ V.T up to the tolerance.
    """
    a = np.array(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("jacobi_eigh needs a square matrix")
    if not np.allclose(a, a.T, atol=1e-10 * max(1.0, np.abs(a).max())):
        raise ValueError("jacobi_eigh needs a symmetric matrix")
    n = a.shape[0]
    v = np.eye(n)
    if n == 1:
        return a.diagonal().copy(), v

    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(n), v
    threshold = tol * scale

    for _ in range(MAX_SWEEPS):
        off = np.sqrt(np.sum(np.triu(a, 1) ** 2) * 2.0)
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= threshold / (n * n):
                    continue
                # Classic stable rotation computation.
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot_p = c * a[:, p] - s * a[:, q]
                rot_q = s * a[:, p] + c * a[:, q]
                a[:, p], a[:, q] = rot_p, rot_q
                rot_p = c * a[p, :] - s * a[q, :]
                rot_q = s * a[p, :] + c * a[q, :]
                a[p, :], a[q, :] = rot_p, rot_q
                rot_p = c * v[:, p] - s * v[:, q]
                rot_q = s * v[:, p] + c * v[:, q]
                v[:, p], v[:, q] = rot_p, rot_q

    values = a.diagonal().copy()
    order = np.argsort(values)[::-1]
    return values[order], v[:, order]
