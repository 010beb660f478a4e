"""Input checks for the estimator API."""
import numpy as np

from .spatial import ORTHO_TOL, Transform


def check_poses(X, tol=1e-8):
    """Return ``X`` as a ``(k, 4, 4)`` float array of rigid transforms.

    Accepts a single 4x4 matrix, a stack of them, or a sequence of
    :class:`Transform`.
    """
    if isinstance(X, Transform):
        X = [X]
    if isinstance(X, (list, tuple)) and X and isinstance(X[0], Transform):
        X = np.stack([t.matrix() for t in X])
    X = np.asarray(X, dtype=float)
    if X.shape == (4, 4):
        X = X[None]
    if X.ndim != 3 or X.shape[1:] != (4, 4):
        raise ValueError(f"expected poses of shape (k, 4, 4), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("poses contain non-finite values")
    rot = X[:, :3, :3]
    ortho = np.abs(np.swapaxes(rot, 1, 2) @ rot - np.eye(3)).max(axis=(1, 2))
    if np.any(ortho > max(tol, ORTHO_TOL)) or np.any(np.abs(np.linalg.det(rot) - 1.0) > max(tol, ORTHO_TOL)):
        raise ValueError("pose rotations must be orthonormal with determinant +1")
    return X


def check_joint_array(Q, dof):
    Q = np.asarray(Q, dtype=float)
    if Q.ndim == 1:
        Q = Q[None]
    if Q.ndim != 2 or Q.shape[1] != dof:
        raise ValueError(f"expected joint configurations of shape (k, {dof}), got {Q.shape}")
    if not np.all(np.isfinite(Q)):
        raise ValueError("joint configurations contain non-finite values")
    return Q
