"""Small dense symmetric linear algebra: correlation matrices and the
Jacobi eigensolver wrapper.

Matrices here are tiny (J variables, J <= ~32), so clarity and
determinism beat asymptotics.  The eigensolver delegates to the kernel
backend; see ``_pycore`` for the rotation scheme and the conventions
(descending eigenvalues, sign-fixed columns, tiny negatives clamped).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import EigenConvergenceError

# Convergence when the off-diagonal Frobenius norm drops below
# JACOBI_TOL * ||S||_F; 100 cyclic sweeps is far beyond what any
# correlation matrix of this size needs (typically < 10).
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
# Correlation matrices are PSD; eigenvalues in (-EIGVAL_CLAMP, 0) are
# roundoff and become exactly 0.
EIGVAL_CLAMP = 1e-10

SYMMETRY_TOL = 1e-12


@dataclass(frozen=True, slots=True)
class EigenResult:
    """Eigenpairs of a symmetric matrix, descending, sign-normalized."""

    eigenvalues: tuple[float, ...]
    vectors: np.ndarray  # columns aligned with eigenvalues


def correlation_matrix(xhat) -> np.ndarray:
    """S = Xhat^T Xhat / (I-1) for a standardized I x J matrix.

    With per-slice standardization the active diagonal entries are 1 up
    to roundoff; all-zero (inactive) columns produce zero rows/columns
    including a zero diagonal.
    """
    x = np.asarray(xhat, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("standardized matrix must be 2-D with at least 2 rows")
    rows = x.tolist()
    n_rows = len(rows)
    n_cols = x.shape[1]
    s = np.empty((n_cols, n_cols), dtype=np.float64)
    for a in range(n_cols):
        for b in range(a, n_cols):
            acc = 0.0
            for i in range(n_rows):
                acc += rows[i][a] * rows[i][b]
            c = acc / (n_rows - 1)
            s[a, b] = c
            s[b, a] = c
    return s


def symmetric_eigen(s, k: int | None = None) -> EigenResult:
    """Full eigendecomposition of a symmetric matrix via cyclic Jacobi.

    ``k`` is optional slice context attached to a convergence failure.
    Output columns satisfy the sign convention (largest-magnitude entry
    non-negative) so repeated runs are byte-identical.
    """
    a = np.ascontiguousarray(s, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if a.shape[0] == 0:
        raise ValueError("matrix must be non-empty")
    if not np.isfinite(a).all():
        raise ValueError("matrix entries must be finite")
    if np.abs(a - a.T).max() > SYMMETRY_TOL:
        raise ValueError(
            "matrix is not symmetric within %g" % SYMMETRY_TOL
        )
    w, v, sweeps = _backend.jacobi_eigh(
        a, JACOBI_TOL, JACOBI_MAX_SWEEPS, EIGVAL_CLAMP
    )
    if sweeps < 0:
        raise EigenConvergenceError(k)
    return EigenResult(eigenvalues=tuple(w), vectors=np.array(v, dtype=np.float64))
