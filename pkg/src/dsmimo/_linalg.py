"""Small Hermitian linear-algebra helpers used throughout the package."""

import numpy as np

from .errors import NumericDomainError


def as_complex_matrix(A, name="matrix"):
    """Return a complex copy of `A`, checking it is a square 2-D array."""
    A = np.array(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return A


def hermitian_deviation(A):
    """Max absolute entry of A - A^H."""
    return float(np.max(np.abs(A - A.conj().T))) if A.size else 0.0


def symmetrize(A):
    """Hermitian part (A + A^H)/2."""
    return (A + A.conj().T) / 2


def eigh_psd(A, clamp=0.0):
    """Eigendecomposition of a Hermitian matrix with eigenvalues clamped at `clamp`.

    Returns (w, U) with w ascending, real, and w >= clamp.
    """
    w, U = np.linalg.eigh(symmetrize(A))
    return np.maximum(w.real, clamp), U


def hermitian_sqrt(A):
    """Hermitian square root of a PSD matrix via eigendecomposition.

    Negative round-off eigenvalues are clamped to zero, which keeps the
    result well defined for nearly singular correlation matrices.
    """
    w, U = eigh_psd(A)
    return (U * np.sqrt(w)) @ U.conj().T


def logdet_hpd(A, method="eigh"):
    """log det of a Hermitian positive definite matrix.

    Parameters
    ----------
    A : ndarray
        Hermitian positive definite matrix.
    method : {"eigh", "cholesky"}
        Two independent computation routes; tests check their agreement.

    Raises
    ------
    NumericDomainError
        If the matrix is numerically not positive definite.
    """
    if method == "eigh":
        w = np.linalg.eigvalsh(symmetrize(A))
        if np.any(w <= 0):
            raise NumericDomainError(
                f"matrix not positive definite (min eigenvalue {w.min():.3e})")
        return float(np.sum(np.log(w)))
    if method == "cholesky":
        try:
            L = np.linalg.cholesky(A)
        except np.linalg.LinAlgError as exc:
            raise NumericDomainError(f"Cholesky factorization failed: {exc}") from exc
        return float(2.0 * np.sum(np.log(np.diag(L).real)))
    raise ValueError(f"unknown logdet method {method!r}")


def is_diagonal(A, tol=1e-12):
    off = A - np.diag(np.diag(A))
    return bool(np.max(np.abs(off), initial=0.0) <= tol)


def spectral_norm_hermitian(A):
    """Spectral norm of a Hermitian matrix (largest |eigenvalue|)."""
    if A.size == 0:
        return 0.0
    w = np.linalg.eigvalsh(symmetrize(A))
    return float(np.max(np.abs(w)))


def readonly(a):
    """Mark an array read-only and return it (shared, not copied)."""
    a.setflags(write=False)
    return a
