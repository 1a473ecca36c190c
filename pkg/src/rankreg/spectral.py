"""Dense SVD helpers and the two spectral operators used by the solvers.

Matrices are plain 2-D ``float64`` numpy arrays. Solver iterates are kept in
truncated factored form (:class:`FactoredIterate`) so that the support of the
singular value vector is always the exact prefix ``{1, ..., rank}``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .exceptions import InputError

__all__ = [
    "SvdFactors",
    "FactoredIterate",
    "as_matrix",
    "svd",
    "reconstruct",
    "factor",
    "hard_threshold",
    "support_project",
    "frobenius_norm",
    "spectral_norm",
    "max_column_norm",
]


def as_matrix(M, name="matrix"):
    """Return `M` as a finite 2-D float64 array, raising InputError otherwise."""
    A = np.asarray(M, dtype=np.float64)
    if A.ndim != 2:
        raise InputError(f"{name} must be 2-D, got shape {A.shape}")
    if A.shape[0] < 1 or A.shape[1] < 1:
        raise InputError(f"{name} must have positive dimensions, got {A.shape}")
    if not np.isfinite(A).all():
        raise InputError(f"{name} contains non-finite entries")
    return A


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``M = U @ diag(sigma) @ V.T`` with ``sigma`` descending."""

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray


@dataclass(frozen=True, eq=False)
class FactoredIterate:
    """Truncated SVD of a solver iterate.

    Only strictly positive singular values are stored, so ``rank`` equals the
    support size of the singular value vector and the support is the prefix
    of length ``rank``.
    """

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray
    shape: tuple

    def __post_init__(self):
        n, k = self.shape
        r = self.sigma.shape[0]
        if self.U.shape != (n, r) or self.V.shape != (k, r):
            raise InputError(
                f"factor shapes {self.U.shape}, {self.V.shape} inconsistent "
                f"with shape {self.shape} and rank {r}")
        if r > min(n, k):
            raise InputError(f"rank {r} exceeds min{self.shape}")
        if r and not (self.sigma > 0).all():
            raise InputError("stored singular values must be strictly positive")

    @classmethod
    def _trusted(cls, U, sigma, V, shape):
        # skip validation for factors cut from a fresh SVD
        obj = object.__new__(cls)
        obj.__dict__.update(U=U, sigma=sigma, V=V, shape=shape)
        return obj

    @property
    def rank(self):
        return self.sigma.shape[0]

    @classmethod
    def zeros(cls, shape):
        n, k = (int(shape[0]), int(shape[1]))
        return cls(np.zeros((n, 0)), np.zeros(0), np.zeros((k, 0)), (n, k))

    def dense(self):
        return reconstruct(self)


def svd(M) -> SvdFactors:
    """Thin SVD of `M` via LAPACK (``gesvd``).

    Singular values are returned in descending order; the sign of each
    singular vector pair is whatever LAPACK produces.
    """
    return _svd(as_matrix(M))


def _svd(A):
    return SvdFactors(*_svd_raw(A))


def _svd_raw(A):
    # unchecked fast path for solver inner loops; direct LAPACK call skips
    # numpy's wrapper overhead, which dominates at the sizes solvers see
    if A.flags.c_contiguous:
        # A.T is Fortran-ordered, so LAPACK can take it without a copy
        U, s, Vt, info = lapack.dgesvd(A.T, compute_uv=1, full_matrices=0)
        if info == 0:
            return Vt.T, s, U
    U, s, Vt, info = lapack.dgesvd(A, compute_uv=1, full_matrices=0)
    if info != 0:
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
    return U, s, Vt.T


def reconstruct(F: FactoredIterate) -> np.ndarray:
    """Dense ``U @ diag(sigma) @ V.T``; the zero matrix for a rank-0 iterate."""
    if F.rank == 0:
        return np.zeros(F.shape)
    return (F.U * F.sigma) @ F.V.T


def _truncate(U, sigma, V, r, shape):
    # drop exact zeros inside the kept prefix; they are never stored
    if r and sigma[r - 1] <= 0:
        r = int(np.count_nonzero(sigma[:r] > 0))
    return FactoredIterate._trusted(U[:, :r], sigma[:r], V[:, :r], shape)


def factor(M) -> FactoredIterate:
    """Factored form of `M` keeping every strictly positive singular value."""
    A = as_matrix(M)
    U, sig, V = _svd_raw(A)
    return _truncate(U, sig, V, sig.shape[0], A.shape)


def hard_threshold(M, theta) -> FactoredIterate:
    """Singular value hard thresholding.

    Every singular value ``sigma_i <= theta`` is set to zero (ties are
    removed); the remaining values and their singular vectors are kept
    untouched.
    """
    if theta < 0:
        raise InputError(f"theta must be nonnegative, got {theta}")
    return _hard_threshold(as_matrix(M), theta)


def _hard_threshold(A, theta):
    U, sig, V = _svd_raw(A)
    # sigma is sorted descending, so the kept values form a prefix
    r = sig.shape[0] - int(sig[::-1].searchsorted(theta, side="right"))
    return _truncate(U, sig, V, r, A.shape)


def support_project(M, r) -> FactoredIterate:
    """Keep the singular values of `M` at positions ``1..r``, zero the rest.

    With descending singular values this is the best rank-`r` approximation
    of `M` in Frobenius norm.
    """
    A = as_matrix(M)
    if int(r) != r or r < 0 or r > min(A.shape):
        raise InputError(f"support size {r} out of range for shape {A.shape}")
    return _support_project(A, int(r))


def _support_project(A, r):
    U, sig, V = _svd_raw(A)
    return _truncate(U, sig, V, r, A.shape)


def frobenius_norm(M) -> float:
    return float(np.linalg.norm(as_matrix(M), "fro"))


def spectral_norm(M) -> float:
    """Largest singular value of `M`."""
    return float(svd(M).sigma[0])


def max_column_norm(M) -> float:
    """Largest Euclidean norm over the columns of `M`."""
    return float(np.max(np.linalg.norm(as_matrix(M), axis=0)))
