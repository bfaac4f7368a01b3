"""Dense vector/matrix kernel.

Vectors and matrices are plain ``float64`` numpy arrays; the helpers here
validate shape and finiteness at the boundary so downstream code can assume
clean inputs.
"""

from __future__ import annotations

import numpy as np


class ConvergenceError(RuntimeError):
    """Raised when an iterative kernel does not converge.

    The last available estimate is kept on ``estimate``.
    """

    def __init__(self, message: str, estimate: float):
        super().__init__(message)
        self.estimate = estimate


def as_vector(x, name: str = "x") -> np.ndarray:
    """Return ``x`` as a finite 1-D float64 array."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


def as_matrix(A, name: str = "A") -> np.ndarray:
    """Return ``A`` as a finite 2-D float64 array."""
    M = np.asarray(A, dtype=np.float64)
    if M.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite entries")
    return M


def matvec(A: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Matrix-vector product with a dimension check."""
    if A.shape[1] != x.shape[0]:
        raise ValueError(
            f"dimension mismatch: matrix has {A.shape[1]} columns, vector has {x.shape[0]} entries"
        )
    return A @ x


def rmatvec(A: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Transposed product ``A.T @ y`` with a dimension check."""
    if A.shape[0] != y.shape[0]:
        raise ValueError(
            f"dimension mismatch: matrix has {A.shape[0]} rows, vector has {y.shape[0]} entries"
        )
    return A.T @ y


def _householder_q(M: np.ndarray, what: str) -> np.ndarray:
    # LAPACK geqrf/orgqr: Householder QR, reduced mode
    Q, R = np.linalg.qr(M, mode="reduced")
    scale = np.linalg.norm(M)
    diag = np.abs(np.diag(R))
    if scale == 0.0 or diag.min() <= 1e-12 * scale:
        raise ValueError(f"{what} is rank deficient")
    return Q


def orthonormalize_rows(B) -> np.ndarray:
    """Orthonormal-row matrix with the same row space as ``B``.

    Computed from a Householder QR factorization of ``B.T``; the result
    ``A`` satisfies ``A @ A.T == I`` to working precision.

    Raises
    ------
    ValueError
        If ``B`` has more rows than columns or is rank deficient.
    """
    B = as_matrix(B, "B")
    m, n = B.shape
    if m > n:
        raise ValueError(f"orthonormalize_rows needs rows <= cols, got {m}x{n}")
    return _householder_q(B.T, "B").T.copy()


def orthonormalize_columns(B) -> np.ndarray:
    """Orthonormal-column matrix spanning the column space of ``B`` (``A.T @ A == I``)."""
    B = as_matrix(B, "B")
    m, n = B.shape
    if n > m:
        raise ValueError(f"orthonormalize_columns needs cols <= rows, got {m}x{n}")
    return _householder_q(B, "B")


def spectral_norm_sq(A, tol: float = 1e-10, max_iter: int = 5000) -> float:
    """Estimate ``||A||_2**2`` by power iteration on ``A.T @ A``.

    Starts from the normalized all-ones vector, so repeated calls give the
    same value. The returned number is the final Rayleigh quotient, which
    never exceeds the true value.

    Raises
    ------
    ValueError
        For a zero matrix or non-positive ``tol``.
    ConvergenceError
        If the relative change is still above ``tol`` after ``max_iter``
        iterations.
    """
    A = as_matrix(A)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not np.any(A):
        raise ValueError("spectral norm of the zero matrix is excluded")
    n = A.shape[1]
    v = np.full(n, 1.0 / np.sqrt(n))
    lam = 0.0
    for _ in range(max_iter):
        w = A.T @ (A @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            # start vector in the null space; restart from a fixed basis vector
            v = np.zeros(n)
            v[int(np.argmax(np.linalg.norm(A, axis=0)))] = 1.0
            continue
        v_next = w / nw
        Av = A @ v_next
        lam_next = float(Av @ Av)
        if lam_next > 0 and abs(lam_next - lam) <= tol * lam_next:
            return lam_next
        lam, v = lam_next, v_next
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} iterations", estimate=lam
    )
