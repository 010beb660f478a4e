"""Rigid transforms and the Cartesian pose error.

Rotations are plain 3x3 numpy arrays. The rotational part of a pose error is
a Rodrigues vector (unit axis scaled by the angle, angle in [0, pi]),
expressed in the base frame.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels

ORTHO_TOL = 1e-10
SMALL_ANGLE = _kernels.SMALL_ANGLE


class SpatialError(ValueError):
    """Raised for rotations that are not proper orthonormal matrices."""


def _check_rotation(r, tol=ORTHO_TOL):
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        raise SpatialError(f"rotation must be 3x3, got shape {r.shape}")
    if not np.all(np.isfinite(r)):
        raise SpatialError("rotation contains non-finite entries")
    if np.max(np.abs(r.T @ r - np.eye(3))) > tol or abs(np.linalg.det(r) - 1.0) > tol:
        raise SpatialError("rotation is not orthonormal with determinant +1")
    return r


def orthonormalize(r):
    """Project a nearly orthonormal matrix back onto SO(3) via SVD."""
    u, _, vt = np.linalg.svd(r)
    out = u @ vt
    if np.linalg.det(out) < 0:
        u[:, -1] = -u[:, -1]
        out = u @ vt
    return out


@dataclass(frozen=True, eq=False)
class Transform:
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        rot = _check_rotation(self.rotation)
        trans = np.asarray(self.translation, dtype=float).reshape(3)
        if not np.all(np.isfinite(trans)):
            raise SpatialError("translation contains non-finite entries")
        rot = rot.copy()
        trans = trans.copy()
        rot.flags.writeable = False
        trans.flags.writeable = False
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", trans)

    @classmethod
    def identity(cls):
        return cls()

    @classmethod
    def from_matrix(cls, m):
        m = np.asarray(m, dtype=float)
        if m.shape != (4, 4):
            raise SpatialError(f"homogeneous matrix must be 4x4, got {m.shape}")
        return cls(m[:3, :3], m[:3, 3])

    @classmethod
    def from_xyz_rpy(cls, xyz, rpy):
        return cls(rpy_to_rotation(rpy), xyz)

    def matrix(self):
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def __matmul__(self, other):
        return compose(self, other)

    def allclose(self, other, atol=1e-12):
        return (np.allclose(self.rotation, other.rotation, rtol=0, atol=atol)
                and np.allclose(self.translation, other.translation, rtol=0, atol=atol))

    def __repr__(self):
        return (f"Transform(rotation={self.rotation.tolist()}, "
                f"translation={self.translation.tolist()})")


def compose(a: Transform, b: Transform) -> Transform:
    rot = a.rotation @ b.rotation
    if np.max(np.abs(rot.T @ rot - np.eye(3))) > ORTHO_TOL:
        rot = orthonormalize(rot)
    return Transform(rot, a.rotation @ b.translation + a.translation)


def invert(a: Transform) -> Transform:
    rt = a.rotation.T
    return Transform(rt, -rt @ a.translation)


def skew(v):
    return np.array([[0.0, -v[2], v[1]],
                     [v[2], 0.0, -v[0]],
                     [-v[1], v[0], 0.0]])


def axis_angle_to_rotation(axis, angle):
    """Rodrigues' rotation formula for a unit axis."""
    k = skew(axis)
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def exp_rotation(rvec):
    """Exponential map from a Rodrigues vector to a rotation matrix."""
    rvec = np.asarray(rvec, dtype=float)
    angle = np.linalg.norm(rvec)
    if angle < SMALL_ANGLE:
        return np.eye(3) + skew(rvec)
    return axis_angle_to_rotation(rvec / angle, angle)


def rotation_to_rodrigues(r) -> np.ndarray:
    """Principal-branch axis-angle vector of a rotation matrix, angle in [0, pi].

    Angles below 1e-9 map to the zero vector. Near pi the axis is read from
    the dominant column of ``(R + R^T)/2 - cos(a) I`` and its sign taken from
    the skew part of R, which keeps the map continuous just below pi.
    """
    r = _check_rotation(r, tol=1e-6)
    return _kernels.rodrigues(np.array(r))


def rpy_to_rotation(rpy):
    """URDF convention: fixed-axis roll about x, pitch about y, yaw about z."""
    roll, pitch, yaw = rpy
    cr, sr = np.cos(roll), np.sin(roll)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cy, sy = np.cos(yaw), np.sin(yaw)
    return np.array([
        [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
        [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
        [-sp, cp * sr, cp * cr],
    ])


def rotation_to_rpy(r):
    r = np.asarray(r, dtype=float)
    pitch = np.arctan2(-r[2, 0], np.hypot(r[0, 0], r[1, 0]))
    if np.hypot(r[0, 0], r[1, 0]) < 1e-12:
        # gimbal lock, put everything into yaw
        return np.array([0.0, pitch, np.arctan2(-r[0, 1], r[1, 1])])
    return np.array([np.arctan2(r[2, 1], r[2, 2]), pitch, np.arctan2(r[1, 0], r[0, 0])])


@dataclass(frozen=True, eq=False)
class CartesianError:
    """6-vector [ex, ey, ez, erx, ery, erz] in metres and radians."""

    eps: np.ndarray

    @property
    def translational(self):
        return self.eps[:3]

    @property
    def rotational(self):
        return self.eps[3:]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.eps, dtype=dtype)


def pose_error(target: Transform, current: Transform) -> CartesianError:
    """``target - current``: position difference and the Rodrigues vector of
    ``R_target R_current^T``, both in the base frame."""
    return CartesianError(_kernels.pose_error(np.array(target.rotation), np.array(target.translation),
                                              np.array(current.rotation), np.array(current.translation)))
