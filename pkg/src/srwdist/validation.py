"""Input validation helpers shared across the package."""

import numpy as np

WEIGHT_SUM_TOL = 1e-12
NORM_TOL = 1e-12
ORTHO_TOL = 1e-10


def as_float_array(a, name="array"):
    """Convert to a C-contiguous float64 ndarray, rejecting NaN and Inf."""
    arr = np.ascontiguousarray(a, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def check_points(points, dim=None):
    """Validate a (n, d) point array; returns the array."""
    pts = as_float_array(points, "points")
    if pts.ndim != 2:
        raise ValueError(f"points must be 2-D, got shape {pts.shape}")
    if pts.shape[0] == 0:
        raise ValueError("points must be non-empty")
    if dim is not None and pts.shape[1] != dim:
        raise ValueError(f"points have dim {pts.shape[1]}, expected {dim}")
    return pts


def check_weights(weights, n=None, name="weights"):
    """Validate a probability weight vector: nonnegative, sums to 1."""
    w = as_float_array(weights, name)
    if w.ndim != 1:
        raise ValueError(f"{name} must be 1-D")
    if n is not None and w.shape[0] != n:
        raise ValueError(f"{name} has length {w.shape[0]}, expected {n}")
    if np.any(w < 0):
        raise ValueError(f"{name} has negative entries")
    s = w.sum()
    if abs(s - 1.0) > WEIGHT_SUM_TOL * max(1.0, w.shape[0]):
        raise ValueError(f"{name} sums to {s!r}, expected 1")
    return w


def check_unit_ball(points, tol=NORM_TOL):
    """Assert every row has Euclidean norm <= 1 + tol."""
    norms = np.linalg.norm(points, axis=1)
    worst = norms.max()
    if worst > 1.0 + tol:
        raise ValueError(f"point with norm {worst!r} escapes the unit ball")
    return points


def check_basis(basis, dim=None, tol=ORTHO_TOL):
    """Validate a (k, d) orthonormal row basis; returns the array."""
    B = as_float_array(basis, "basis")
    if B.ndim == 1:
        B = B[None, :]
    if dim is not None and B.shape[1] != dim:
        raise ValueError(f"basis vectors have dim {B.shape[1]}, expected {dim}")
    if B.shape[0] > B.shape[1]:
        raise ValueError("more basis vectors than ambient dimensions")
    G = B @ B.T
    err = np.abs(G - np.eye(B.shape[0])).max()
    if err > tol:
        raise ValueError(f"basis not orthonormal (gram error {err:.2e})")
    return B


def check_symmetric(A, tol=1e-12, name="matrix"):
    """Validate a square symmetric matrix; returns the symmetrized array."""
    M = as_float_array(A, name)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square, got shape {M.shape}")
    err = np.abs(M - M.T).max()
    if err > tol:
        raise ValueError(f"{name} not symmetric (max asymmetry {err:.2e})")
    return 0.5 * (M + M.T)
