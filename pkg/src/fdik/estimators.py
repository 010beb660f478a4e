"""scikit-learn style wrappers.

``ForwardDynamicsIK`` and ``JacobianTransposeIK`` map target poses to joint
configurations with ``predict``; ``MobilityTransformer`` maps joint
configurations to flattened 6x6 force-to-acceleration matrices and records
their per-entry statistics in ``fit``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_joint_array, check_poses
from .dynamics import kinematic_mobility, task_space_mobility
from .experiments import RunningMoments, START_Q
from .kinematics import forward_kinematics_batch
from .model import ChainModel, builtin_ur10, conditioned, load_chain
from .solver import DEFAULT_KP, BaselineConfig, SolverConfig, compute_alpha, solve_fd, solve_jt


def _resolve_chain(model):
    if isinstance(model, ChainModel):
        return model
    if model == "ur10-builtin":
        return builtin_ur10()
    with open(model) as fh:
        return load_chain(fh.read())


class ForwardDynamicsIK(RegressorMixin, BaseEstimator):
    """IK through the forward dynamics of a conditioned twin.

    Parameters
    ----------
    model : "ur10-builtin", a URDF path or a ChainModel
    conditioning : "twin" or "uniform"
    mass, inertia : end-effector mass and 3x3 rotational inertia of the twin
    kp, kd : diagonal gains (scalar or 6 entries)
    dt, n_iter : virtual step and iterations per solve
    q0 : start configuration; defaults to the experiments' start pose
    warm_start : solve each target from the previous solution instead of ``q0``
    """

    def __init__(self, model="ur10-builtin", conditioning="twin", mass=1.0, inertia=None,
                 kp=DEFAULT_KP, kd=0.0, dt=1.0, n_iter=150, q0=None, warm_start=False):
        self.model = model
        self.conditioning = conditioning
        self.mass = mass
        self.inertia = inertia
        self.kp = kp
        self.kd = kd
        self.dt = dt
        self.n_iter = n_iter
        self.q0 = q0
        self.warm_start = warm_start

    def fit(self, X=None, y=None):
        """Build the conditioned chain. ``X`` and ``y`` are ignored."""
        if self.conditioning not in ("twin", "uniform"):
            raise ValueError("conditioning must be 'twin' or 'uniform'")
        inertia = np.eye(3) if self.inertia is None else np.asarray(self.inertia, dtype=float)
        self.chain_ = conditioned(_resolve_chain(self.model), self.conditioning, self.mass, inertia)
        self.n_features_in_ = 16
        q0 = START_Q if self.q0 is None else self.q0
        self.q0_ = check_joint_array(q0, self.chain_.dof)[0]
        self.solver_config_ = SolverConfig(self.kp, self.kd, self.dt, self.n_iter)
        return self

    def _solve(self, target, q):
        return solve_fd(self.chain_, target, q, self.solver_config_).q_final

    def predict(self, X):
        """Joint configurations for target poses ``X`` of shape ``(k, 4, 4)``."""
        check_is_fitted(self, "chain_")
        X = check_poses(X)
        out = np.empty((len(X), self.chain_.dof))
        q = self.q0_
        for i, target in enumerate(X):
            out[i] = self._solve(target, q if self.warm_start else self.q0_)
            q = out[i]
        return out

    def transform(self, Q):
        """Tip poses ``(k, 4, 4)`` of joint configurations ``Q``."""
        check_is_fitted(self, "chain_")
        Q = check_joint_array(Q, self.chain_.dof)
        rot, pos = forward_kinematics_batch(self.chain_, Q)
        out = np.zeros((len(Q), 4, 4))
        out[:, :3, :3] = rot
        out[:, :3, 3] = pos
        out[:, 3, 3] = 1.0
        return out

    def score(self, X, y=None, sample_weight=None):
        """Negative mean translational error of the solutions for ``X``."""
        X = check_poses(X)
        reached = self.transform(self.predict(X))
        err = np.linalg.norm(reached[:, :3, 3] - X[:, :3, 3], axis=1)
        return -float(np.average(err, weights=sample_weight))


class JacobianTransposeIK(ForwardDynamicsIK):
    """Jacobian-transpose baseline with ``K = alpha I``.

    ``alpha="auto"`` matches the mean force-to-acceleration diagonal of the
    conditioned twin, sampled with ``n_alpha_samples`` and ``random_state``.
    """

    def __init__(self, model="ur10-builtin", conditioning="twin", mass=1.0, inertia=None,
                 kp=DEFAULT_KP, dt=1.0, n_iter=150, q0=None, warm_start=False, alpha="auto",
                 n_alpha_samples=100_000, random_state=0):
        super().__init__(model=model, conditioning=conditioning, mass=mass, inertia=inertia, kp=kp,
                         kd=0.0, dt=dt, n_iter=n_iter, q0=q0, warm_start=warm_start)
        self.alpha = alpha
        self.n_alpha_samples = n_alpha_samples
        self.random_state = random_state

    def fit(self, X=None, y=None):
        super().fit(X, y)
        if isinstance(self.alpha, str) and self.alpha == "auto":
            self.alpha_ = compute_alpha(self.chain_, self.n_alpha_samples, self.random_state)
        else:
            self.alpha_ = float(self.alpha)
        self.solver_config_ = BaselineConfig(self.alpha_, self.kp, self.dt, self.n_iter)
        return self

    def _solve(self, target, q):
        return solve_jt(self.chain_, target, q, self.solver_config_).q_final


class MobilityTransformer(TransformerMixin, BaseEstimator):
    """Joint configurations to flattened 6x6 force-to-acceleration matrices.

    ``variant`` is "twin" or "uniform" (``J H^-1 J^T`` of that model) or
    "kinematic" (``J J^T``). ``fit`` stores per-entry ``mean_``, ``variance_``
    and ``std_`` over the given configurations.
    """

    def __init__(self, model="ur10-builtin", variant="twin", mass=1.0, inertia=None):
        self.model = model
        self.variant = variant
        self.mass = mass
        self.inertia = inertia

    def _chain(self):
        inertia = np.eye(3) if self.inertia is None else np.asarray(self.inertia, dtype=float)
        return conditioned(_resolve_chain(self.model), self.variant, self.mass, inertia)

    def fit(self, X, y=None):
        if self.variant not in ("twin", "uniform", "kinematic"):
            raise ValueError(f"unknown variant {self.variant!r}")
        self.chain_ = self._chain()
        X = check_joint_array(X, self.chain_.dof)
        self.n_features_in_ = self.chain_.dof
        moments = RunningMoments((6, 6))
        for start in range(0, len(X), 10_000):
            moments.update(self._map(X[start:start + 10_000]))
        self.mean_, self.variance_, self.std_ = moments.mean, moments.variance, moments.std
        return self

    def _map(self, Q):
        if self.variant == "kinematic":
            return kinematic_mobility(self.chain_, Q)
        return task_space_mobility(self.chain_, Q)

    def transform(self, X):
        check_is_fitted(self, "chain_")
        X = check_joint_array(X, self.chain_.dof)
        return self._map(X).reshape(len(X), 36)
