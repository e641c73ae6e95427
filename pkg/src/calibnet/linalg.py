"""Shared numeric policies: symmetric pseudoinverse and nullspace bases.

All rank decisions in the package go through the same relative threshold:
eigenvalues (or singular values) below ``eps * n * largest`` are treated as
zero, where ``n`` is the matrix dimension. This keeps rank handling
scale-invariant and identical across modules.
"""

from __future__ import annotations

import numpy as np

_EPS = float(np.finfo(float).eps)


def sym_pinv(a: np.ndarray, rtol: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudoinverse of a symmetric matrix via eigendecomposition.

    ``rtol`` overrides the default relative cutoff ``eps * n``; eigenvalues
    with magnitude below ``rtol * max|eig|`` are zeroed rather than inverted.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("sym_pinv expects a square matrix")
    w, v = np.linalg.eigh(0.5 * (a + a.T))
    scale = np.max(np.abs(w), initial=0.0)
    cut = (rtol if rtol is not None else _EPS * n) * scale
    keep = np.abs(w) > cut
    inv_w = np.zeros_like(w)
    inv_w[keep] = 1.0 / w[keep]
    out = (v * inv_w) @ v.T
    return 0.5 * (out + out.T)


def nullspace_basis(c: np.ndarray) -> np.ndarray:
    """Orthonormal basis for the nullspace of ``c`` (columns), via full SVD.

    Returns an (n, n - rank) matrix; rank uses the package-wide relative
    threshold. For a full-rank square matrix the result has zero columns.
    """
    c = np.atleast_2d(np.asarray(c, dtype=float))
    _, s, vt = np.linalg.svd(c)
    tol = _EPS * max(c.shape) * (s[0] if s.size else 0.0)
    rank = int(np.count_nonzero(s > tol))
    return vt[rank:].T
