"""Small dense kernels: pivoted linear solves and Jacobi symmetric eigenvalues.

Vectors and matrices are plain ``numpy.ndarray`` objects of ``float64``. The
matrices that appear in this package are tiny (3x3 in the reference example),
so the routines favour transparency over speed.
"""

import numpy as np

from .errors import DimensionMismatch, NotSymmetric, SingularMatrix

PIVOT_RTOL = 1e-14
SYMMETRY_RTOL = 1e-10


def as_vec(v, name="vector"):
    """Return ``v`` as a finite 1-d float array."""
    arr = np.array(v, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionMismatch(f"{name} must be a non-empty 1-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def as_mat(m, name="matrix"):
    """Return ``m`` as a finite square 2-d float array."""
    arr = np.array(m, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise DimensionMismatch(f"{name} must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def solve_dense(a, b):
    """Solve ``a @ x = b`` by Gaussian elimination with partial pivoting.

    Raises
    ------
    SingularMatrix
        If a pivot falls below ``1e-14 * max|a_ij|``.
    """
    a = as_mat(a)
    b = np.array(b, dtype=float)
    n = a.shape[0]
    if b.shape[0] != n:
        raise DimensionMismatch(f"right-hand side has length {b.shape[0]}, expected {n}")

    scale = np.max(np.abs(a))
    threshold = PIVOT_RTOL * scale
    lu = a.copy()
    rhs = b.copy()
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if abs(lu[p, k]) <= threshold or scale == 0.0:
            raise SingularMatrix(f"pivot {k} has magnitude {abs(lu[p, k]):.3e}")
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            rhs[[k, p]] = rhs[[p, k]]
        factors = lu[k + 1:, k] / lu[k, k]
        lu[k + 1:, k:] -= np.outer(factors, lu[k, k:])
        rhs[k + 1:] -= np.multiply.outer(factors, rhs[k])

    x = np.empty_like(rhs)
    for k in range(n - 1, -1, -1):
        x[k] = (rhs[k] - lu[k, k + 1:] @ x[k + 1:]) / lu[k, k]
    return x


def inverse(a):
    """Dense inverse built column by column from :func:`solve_dense`."""
    a = as_mat(a)
    return solve_dense(a, np.eye(a.shape[0]))


def _check_symmetric(s):
    s = as_mat(s)
    asym = np.max(np.abs(s - s.T))
    scale = max(np.max(np.abs(s)), 1.0)
    if asym > SYMMETRY_RTOL * scale:
        raise NotSymmetric(f"relative asymmetry {asym / scale:.3e} exceeds {SYMMETRY_RTOL}")
    return 0.5 * (s + s.T)


def sym_eigen(s, tol=1e-15, max_sweeps=100):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns
    -------
    values : ndarray
        Eigenvalues in ascending order.
    vectors : ndarray
        Orthonormal eigenvectors stored as columns, matching ``values``.
    """
    a = _check_symmetric(s).copy()
    n = a.shape[0]
    v = np.eye(n)
    norm = np.linalg.norm(a)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off <= tol * max(norm, 1e-300):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                # rotation angle annihilating a[p, q] (Rutishauser's form)
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s_ = t * c
                rot = np.array([[c, s_], [-s_, c]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ rot
                a[idx, :] = rot.T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                v[:, idx] = v[:, idx] @ rot
    values = np.diag(a).copy()
    order = np.argsort(values, kind="stable")
    return values[order], v[:, order]


def sym_eigen_min(s):
    """Smallest eigenvalue of a symmetric matrix (absolute accuracy ~1e-10)."""
    return float(sym_eigen(s)[0][0])
