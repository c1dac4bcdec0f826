"""Dense Hermitian linear algebra kernel shared by every other module.

All matrices are numpy arrays of complex128.  Functions validate their inputs
and raise ValueError on malformed data (non-square, non-finite, asymmetric
beyond tolerance), so downstream modules can assume clean operands.
"""
from __future__ import annotations

import numpy as np

DEFAULT_HERM_TOL = 1e-8
DEFAULT_RANK_TOL = 1e-9


def _as_square(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def hermitian_part(a) -> np.ndarray:
    """(A + A^dagger) / 2 without any symmetry check."""
    a = _as_square(a)
    return (a + a.conj().T) / 2


def as_hermitian(a, herm_tol: float = DEFAULT_HERM_TOL) -> np.ndarray:
    """Validate that A is Hermitian up to herm_tol (relative) and symmetrize.

    The check is ||A - A^dagger||_F <= herm_tol * max(1, ||A||_F); the returned
    matrix is exactly Hermitian.
    """
    a = _as_square(a)
    asym = np.linalg.norm(a - a.conj().T)
    if asym > herm_tol * max(1.0, np.linalg.norm(a)):
        raise ValueError(f"matrix is not Hermitian: asymmetry {asym:.3e}")
    return (a + a.conj().T) / 2


def eig_hermitian(a, herm_tol: float = DEFAULT_HERM_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns (w, v) with real eigenvalues w sorted ascending and orthonormal
    eigenvector columns v, so that a = v @ diag(w) @ v^dagger.
    """
    a = as_hermitian(a, herm_tol)
    w, v = np.linalg.eigh(a)
    return w, v


def numerical_rank(a, rank_tol: float = DEFAULT_RANK_TOL) -> int:
    """Count eigenvalues of Hermitian A with |w| > rank_tol * max(1, max|w|)."""
    if rank_tol < 0:
        raise ValueError("rank_tol must be non-negative")
    a = as_hermitian(a)
    w = np.linalg.eigvalsh(a)
    scale = max(1.0, float(np.abs(w).max())) if w.size else 1.0
    return int(np.count_nonzero(np.abs(w) > rank_tol * scale))


def psd_project(a, herm_tol: float = DEFAULT_HERM_TOL) -> np.ndarray:
    """Frobenius-nearest positive semidefinite matrix: clip negative eigenvalues."""
    w, v = eig_hermitian(a, herm_tol)
    w = np.clip(w, 0.0, None)
    return hermitian_part((v * w) @ v.conj().T)


def frobenius_inner(a, b) -> complex:
    """Tr(A^dagger B)."""
    a = _as_square(a)
    b = _as_square(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))
