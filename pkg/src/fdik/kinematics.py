"""Forward kinematics and the base-frame geometric Jacobian of the chain tip.

Array functions take a single configuration of shape ``(n,)`` or a batch of
shape ``(..., n)``.
"""
from __future__ import annotations

import numpy as np

from . import _kernels
from .model import ChainModel
from .spatial import Transform


class KinematicsError(ValueError):
    pass


def check_q(chain: ChainModel, q) -> np.ndarray:
    q = np.array(q, dtype=float)
    if q.ndim == 0 or q.shape[-1] != chain.dof:
        raise KinematicsError(f"expected joint vector of length {chain.dof}, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        raise KinematicsError("joint vector contains non-finite values")
    return q


def _flat(q, n):
    return np.ascontiguousarray(q.reshape(-1, n))


def forward_kinematics(chain: ChainModel, q) -> Transform:
    """Tip pose in the base frame, ``origin_1 rot(q_1) ... origin_n rot(q_n) tip``."""
    q = check_q(chain, q)
    if q.ndim != 1:
        raise KinematicsError("forward_kinematics takes one configuration; use forward_kinematics_batch")
    _, _, _, rot, pos = _kernels.frames(chain.arrays, q)
    return Transform(rot, pos)


def forward_kinematics_batch(chain: ChainModel, q):
    """Tip rotations ``(..., 3, 3)`` and positions ``(..., 3)``."""
    q = check_q(chain, q)
    rot, pos = _kernels.fk_batch(chain.arrays, _flat(q, chain.dof))
    batch = q.shape[:-1]
    return rot.reshape(batch + (3, 3)), pos.reshape(batch + (3,))


def joint_frames(chain: ChainModel, q):
    """World rotation and origin of every joint frame plus the world joint axes."""
    q = check_q(chain, q)
    rot, pos, axes, _, _ = _kernels.frames(chain.arrays, q)
    return rot, pos, axes


def geometric_jacobian(chain: ChainModel, q) -> np.ndarray:
    """6 x n Jacobian, base frame, reference point at the tip origin.

    Rows 0-2 are the linear velocity of the tip origin, rows 3-5 the angular
    velocity; column ``i`` is ``(z_i x (p_tip - p_i), z_i)``.
    """
    q = check_q(chain, q)
    jac = _kernels.jacobian_batch(chain.arrays, _flat(q, chain.dof))
    return jac.reshape(q.shape[:-1] + (6, chain.dof))
