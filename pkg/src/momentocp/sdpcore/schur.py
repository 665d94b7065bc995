"""Schur-complement assembly kernels for block LMI maps.

A block's linear map is stored entrywise: matrix entry (i, j) with i <= j
receives weight w times variable `var`.  The interior-point Schur matrix
needs H[g1, g2] = tr(A_g1 W A_g2 W) for the per-variable coefficient
matrices A_g; with entry multiplicities folded into the kernel weights
this is a sum of W[i1,i2]W[j1,j2] + W[i1,j2]W[j1,i2] products over entry
pairs.  The numba path parallelizes over the output row.
"""

from __future__ import annotations

import numpy as np

try:  # pragma: no cover - exercised implicitly
    from numba import njit, prange

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

_SQRT_HALF = np.sqrt(0.5)


def kernel_weights(I, J, w):
    """Fold entry multiplicity into kernel weights: w * (1 if diag else 2) / sqrt(2)."""
    mult = np.where(I == J, 1.0, 2.0)
    return w * mult * _SQRT_HALF


if _HAVE_NUMBA:

    @njit(parallel=True, fastmath=True, cache=True)
    def _schur_numba(sI, sJ, sC, starts, I, J, C, V, W, n):  # pragma: no cover - jitted
        H = np.zeros((n, n))
        m = I.size
        for g1 in prange(n):
            lo, hi = starts[g1], starts[g1 + 1]
            if lo == hi:
                continue
            row = H[g1]
            for e1 in range(lo, hi):
                i1 = sI[e1]
                j1 = sJ[e1]
                c1 = sC[e1]
                Wi = W[i1]
                Wj = W[j1]
                for e2 in range(m):
                    i2 = I[e2]
                    j2 = J[e2]
                    row[V[e2]] += c1 * C[e2] * (Wi[i2] * Wj[j2] + Wi[j2] * Wj[i2])
        return H


def _schur_numpy(sI, sJ, sC, starts, I, J, C, V, W, n):
    H = np.zeros((n, n))
    for g1 in range(n):
        lo, hi = starts[g1], starts[g1 + 1]
        for e1 in range(lo, hi):
            i1, j1, c1 = sI[e1], sJ[e1], sC[e1]
            contrib = c1 * C * (W[i1, I] * W[j1, J] + W[i1, J] * W[j1, I])
            H[g1] += np.bincount(V, weights=contrib, minlength=n)
    return H


class SchurData:
    """Precomputed entry layout for one block's Schur contribution."""

    def __init__(self, I, J, var, w, n_local: int):
        I = np.asarray(I, dtype=np.int32)
        J = np.asarray(J, dtype=np.int32)
        var = np.asarray(var, dtype=np.int32)
        C = kernel_weights(I, J, np.asarray(w, dtype=float))
        order = np.argsort(var, kind="stable")
        self.sI, self.sJ, self.sC = I[order], J[order], C[order]
        self.starts = np.searchsorted(var[order], np.arange(n_local + 1)).astype(np.int64)
        self.I, self.J, self.C, self.V = I, J, C, var
        self.n_local = n_local

    def schur(self, W: np.ndarray) -> np.ndarray:
        args = (self.sI, self.sJ, self.sC, self.starts, self.I, self.J, self.C, self.V, W,
                self.n_local)
        if _HAVE_NUMBA:
            return _schur_numba(*args)
        return _schur_numpy(*args)
