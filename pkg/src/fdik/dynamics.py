"""Joint-space inertia via the Composite Rigid Body Algorithm and the task-space mobility.

Only the inertia matrix H(q) is modelled; velocity-dependent and gravity
terms are deliberately absent. H is never inverted explicitly, every
``H^-1 v`` goes through a Cholesky factorization.
"""
from __future__ import annotations

import numpy as np

from . import _kernels
from .kinematics import check_q
from .model import ChainModel, ModelError

SYMMETRY_TOL = 1e-9


class DegenerateModelError(ModelError):
    """The joint-space inertia matrix is not positive definite."""


def _flat(q, n):
    return np.ascontiguousarray(q.reshape(-1, n))


def joint_space_inertia(chain: ChainModel, q) -> np.ndarray:
    q = check_q(chain, q)
    h = _kernels.inertia_batch(chain.arrays, _flat(q, chain.dof))
    return h.reshape(q.shape[:-1] + (chain.dof, chain.dof))


def apply_inverse_inertia(h, v) -> np.ndarray:
    """Solve ``H x = v`` for symmetric positive-definite ``H``."""
    h = np.array(h, dtype=float)
    v = np.array(v, dtype=float)
    if h.ndim != 2 or h.shape[0] != h.shape[1] or v.shape != (h.shape[0],):
        raise ValueError(f"shape mismatch: H {h.shape}, v {v.shape}")
    low, status = _kernels.cholesky(h)
    if status != _kernels.OK:
        raise DegenerateModelError("inertia matrix is not positive definite")
    return _kernels.cho_solve(low, v)


def _mobilities(chain, q):
    q = check_q(chain, q)
    dyn, kin, status, drift = _kernels.mobility_batch(chain.arrays, _flat(q, chain.dof))
    if status != _kernels.OK:
        raise DegenerateModelError("inertia matrix is not positive definite")
    if drift > SYMMETRY_TOL:
        raise DegenerateModelError(f"J H^-1 J^T asymmetry {drift:.3g} exceeds {SYMMETRY_TOL}")
    batch = q.shape[:-1]
    return dyn.reshape(batch + (6, 6)), kin.reshape(batch + (6, 6))


def task_space_mobility(chain: ChainModel, q) -> np.ndarray:
    """``J H^-1 J^T``: Cartesian acceleration of the tip per unit end-effector force."""
    return _mobilities(chain, q)[0]


def kinematic_mobility(chain: ChainModel, q) -> np.ndarray:
    """``J J^T``, the force-to-acceleration map of the unit-gain Jacobian-transpose method."""
    q = check_q(chain, q)
    jac = _kernels.jacobian_batch(chain.arrays, _flat(q, chain.dof))
    return (jac @ np.swapaxes(jac, -1, -2)).reshape(q.shape[:-1] + (6, 6))


def mobility_pair(chain: ChainModel, q):
    """Both mappings in one pass: ``(J H^-1 J^T, J J^T)``."""
    return _mobilities(chain, q)
