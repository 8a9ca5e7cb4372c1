"""Dense vector/matrix validation and least-squares kernels.

Everything here is a pure function of its inputs; arrays are treated as
immutable after validation.
"""

import numpy as np

from .errors import DimensionMismatch, NotSymmetric, SingularSystem

# Relative threshold on the triangular factor's diagonal below which an
# unregularized solve is declared rank-deficient.
RANK_TOLERANCE = 1e-12

# Relative (to the max entry) tolerance for the symmetry check.
SYMMETRY_TOLERANCE = 1e-12


def as_vector(x, name="vector"):
    """Validate and return a finite 1-D float array."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise DimensionMismatch(f"{name} must be a 1-D array with at least one entry")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_matrix(a, name="matrix"):
    """Validate and return a finite 2-D float array."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionMismatch(f"{name} must be a 2-D array with at least one row and column")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def solve_regularized_ls(U, rhs, lam):
    """Minimize 0.5*||rhs - U w||^2 + 0.5*lam*||w||^2 over w.

    Solved through a QR factorization of the stacked system
    [U; sqrt(lam)*I] rather than by forming U^T U, for conditioning.
    The solution satisfies (U^T U + lam*I) w = U^T rhs.

    Raises SingularSystem when ``lam == 0`` and the triangular factor has
    a diagonal entry below RANK_TOLERANCE times its largest one.
    """
    U = as_matrix(U, "U")
    rhs = as_vector(rhs, "rhs")
    n, p = U.shape
    if rhs.shape[0] != n:
        raise DimensionMismatch(f"rhs has length {rhs.shape[0]}, expected {n}")
    if lam < 0:
        raise ValueError("lam must be nonnegative")

    if lam > 0.0:
        stacked = np.vstack([U, np.sqrt(lam) * np.eye(p)])
        target = np.concatenate([rhs, np.zeros(p)])
    else:
        if n < p:
            raise SingularSystem(
                f"underdetermined system ({n} rows < {p} columns) with lam = 0"
            )
        stacked = U
        target = rhs

    Q, R = np.linalg.qr(stacked)
    diag = np.abs(np.diag(R))
    if lam == 0.0:
        largest = diag.max()
        if largest == 0.0 or diag.min() < RANK_TOLERANCE * largest:
            raise SingularSystem(
                "rank-deficient normal equations "
                f"(min/max diagonal factor ratio {diag.min():.3e}/{largest:.3e})"
            )
    return np.linalg.solve(R, Q.T @ target)


def spectral_bounds(A):
    """Smallest and largest eigenvalue of a symmetric matrix.

    The input must be square and symmetric to within
    SYMMETRY_TOLERANCE times its largest absolute entry.
    """
    A = as_matrix(A, "A")
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"matrix is {A.shape[0]}x{A.shape[1]}, expected square")
    scale = np.abs(A).max()
    if np.abs(A - A.T).max() > SYMMETRY_TOLERANCE * scale:
        raise NotSymmetric(
            f"asymmetry {np.abs(A - A.T).max():.3e} exceeds tolerance "
            f"{SYMMETRY_TOLERANCE * scale:.3e}"
        )
    eigs = np.linalg.eigvalsh(0.5 * (A + A.T))
    return float(eigs[0]), float(eigs[-1])


def spectral_norm(A, tol=1e-8, max_iterations=10_000):
    """Largest singular value of A by power iteration on A^T A.

    Deterministic: the starting vector comes from a fixed-seed generator.
    """
    A = as_matrix(A, "A")
    rng = np.random.default_rng(0)
    v = rng.standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iterations):
        w = A.T @ (A @ v)
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0
        v = w / norm_w
        sigma_new = float(np.sqrt(norm_w))
        if abs(sigma_new - sigma) <= tol * sigma_new:
            return sigma_new
        sigma = sigma_new
    return sigma
