"""Symmetric tridiagonal eigendecomposition with backend dispatch."""
from __future__ import annotations

import numpy as np

from ._backend import kernels


def eigh_tridiagonal(diag, off, vectors: bool = True, cluster_tol: float = 1e-5):
    """Eigenvalues (ascending) and, optionally, eigenvectors as rows.

    Eigenvalues come from implicit-shift QL (compiled backend) or Sturm
    bisection (fallback); eigenvectors from inverse iteration with
    re-orthogonalisation inside clusters closer than ``cluster_tol * ||T||``.
    """
    diag = np.ascontiguousarray(diag, dtype=float)
    off = np.ascontiguousarray(off, dtype=float)
    if off.shape[0] != max(diag.shape[0] - 1, 0):
        raise ValueError("off-diagonal must have length n - 1")
    w = np.asarray(kernels.tridiag_eigvals(diag, off))
    if not vectors:
        return w
    Z = np.asarray(kernels.tridiag_eigvecs(diag, off, w, cluster_tol))
    return w, Z
