"""Forward-dynamics IK solver, the alpha-matched Jacobian-transpose baseline and streaming tracking.

One solver iteration, with ``eps_prev`` starting at zero::

    eps   = x_d - g(q)
    deps  = (eps - eps_prev) / dt
    f     = Kp eps + Kd deps
    qdd   = H(q)^-1 J(q)^T f          # baseline: alpha J^T Kp eps
    qd    = 0.5 qdd dt                # previous acceleration taken as zero
    q     = q + 0.5 qd dt             # previous velocity taken as zero

Velocity is never carried from one iteration to the next.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional

import numpy as np

from . import _kernels
from .dynamics import DegenerateModelError, mobility_pair
from .kinematics import check_q
from .model import ChainModel
from .spatial import Transform

# Kp = diag(1, 1, 1, 0.1, 0.1, 0.1) used throughout the experiments
DEFAULT_KP = (1.0, 1.0, 1.0, 0.1, 0.1, 0.1)


class SolverError(ValueError):
    pass


class TimestampError(SolverError):
    """Target timestamps must be strictly increasing."""


def _gain_vector(values, name, positive):
    g = np.array(values, dtype=float).reshape(-1)
    if g.size == 1:
        g = np.repeat(g, 6)
    if g.shape != (6,):
        raise SolverError(f"{name} needs 6 diagonal entries, got {g.size}")
    if positive and not np.all(g > 0):
        raise SolverError(f"{name} entries must be > 0")
    if not positive and not np.all(g >= 0):
        raise SolverError(f"{name} entries must be >= 0")
    g.flags.writeable = False
    return g


@dataclass(frozen=True, eq=False)
class SolverConfig:
    kp: np.ndarray = DEFAULT_KP
    kd: np.ndarray = 0.0
    dt: float = 1.0
    n_iter: int = 150

    def __post_init__(self):
        object.__setattr__(self, "kp", _gain_vector(self.kp, "kp", positive=True))
        object.__setattr__(self, "kd", _gain_vector(self.kd, "kd", positive=False))
        if not self.dt > 0:
            raise SolverError("dt must be > 0")
        if int(self.n_iter) != self.n_iter or self.n_iter < 1:
            raise SolverError("n_iter must be a positive integer")
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "n_iter", int(self.n_iter))

    def scaled(self, k):
        """Copy with ``kp`` multiplied by ``k``."""
        return SolverConfig(self.kp * k, self.kd, self.dt, self.n_iter)


@dataclass(frozen=True, eq=False)
class BaselineConfig:
    alpha: float
    kp: np.ndarray = DEFAULT_KP
    dt: float = 1.0
    n_iter: int = 150

    def __post_init__(self):
        # alpha = 0 is accepted as a degenerate, motionless baseline
        if not self.alpha >= 0:
            raise SolverError("alpha must be >= 0")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "kp", _gain_vector(self.kp, "kp", positive=True))
        if not self.dt > 0:
            raise SolverError("dt must be > 0")
        if int(self.n_iter) != self.n_iter or self.n_iter < 1:
            raise SolverError("n_iter must be a positive integer")
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "n_iter", int(self.n_iter))


class SolverState(NamedTuple):
    q: np.ndarray
    eps_prev: np.ndarray

    @classmethod
    def start(cls, q0):
        return cls(np.array(q0, dtype=float), np.zeros(6))


@dataclass
class SolveTrace:
    q: np.ndarray    # (N, n) joint vector after each iteration
    eps: np.ndarray  # (N, 6) error evaluated at the start of each iteration
    qdd: np.ndarray  # (N, n)

    @property
    def q_final(self):
        return self.q[-1]

    def __len__(self):
        return len(self.q)


def _as_target(target):
    if isinstance(target, Transform):
        return np.array(target.rotation), np.array(target.translation)
    m = np.asarray(target, dtype=float)
    if m.shape != (4, 4):
        raise SolverError("target must be a Transform or a 4x4 homogeneous matrix")
    return np.array(Transform.from_matrix(m).rotation), m[:3, 3].copy()


_NO_RECORD = np.empty((0, 0)), np.empty((0, 6)), np.empty((0, 0))


def _run_fd(chain, rot, pos, q, eps_prev, cfg, n_iter, record):
    status, q, eps_prev = _kernels.fd_iterations(
        chain.arrays, rot, pos, q, eps_prev, np.array(cfg.kp), np.array(cfg.kd), cfg.dt, n_iter, *record)
    if status != _kernels.OK:
        raise DegenerateModelError("inertia matrix is not positive definite")
    return q, eps_prev


def step_fd(chain: ChainModel, target, state: SolverState, cfg: SolverConfig) -> SolverState:
    """Run exactly one forward-dynamics iteration and return the new ``(q, eps_prev)``."""
    q = check_q(chain, state.q)
    rot, pos = _as_target(target)
    eps_prev = np.array(state.eps_prev, dtype=float).reshape(6)
    return SolverState(*_run_fd(chain, rot, pos, q, eps_prev, cfg, 1, _NO_RECORD))


def solve_fd(chain: ChainModel, target, q0, cfg: SolverConfig) -> SolveTrace:
    """Iterate :func:`step_fd` ``cfg.n_iter`` times from ``(q0, eps_prev = 0)``."""
    q = check_q(chain, q0)
    rot, pos = _as_target(target)
    n = cfg.n_iter
    trace = SolveTrace(np.empty((n, chain.dof)), np.empty((n, 6)), np.empty((n, chain.dof)))
    _run_fd(chain, rot, pos, q, np.zeros(6), cfg, n, (trace.q, trace.eps, trace.qdd))
    return trace


def solve_jt(chain: ChainModel, target, q0, cfg: BaselineConfig) -> SolveTrace:
    """Jacobian-transpose baseline, ``qdd = alpha J^T Kp eps``, same integration as :func:`solve_fd`."""
    q = check_q(chain, q0)
    rot, pos = _as_target(target)
    n = cfg.n_iter
    trace = SolveTrace(np.empty((n, chain.dof)), np.empty((n, 6)), np.empty((n, chain.dof)))
    _kernels.jt_iterations(chain.arrays, rot, pos, q, cfg.alpha, np.array(cfg.kp), cfg.dt, n,
                           trace.q, trace.eps, trace.qdd)
    return trace


def sample_configurations(n_dof, n_samples, seed, chunk=10_000):
    """Yield chunks of joint vectors drawn uniformly from [-pi, pi).

    The generator is numpy's PCG64 seeded with ``seed``; the concatenated
    chunks form the same sequence for any chunk size.
    """
    if n_samples < 1:
        raise SolverError("n_samples must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    done = 0
    while done < n_samples:
        k = min(chunk, n_samples - done)
        yield rng.uniform(-np.pi, np.pi, size=(k, n_dof))
        done += k


def mean_diagonals(chain: ChainModel, n_samples: int, seed: int):
    """Sample means of diag(J H^-1 J^T) and diag(J J^T), 6-vectors each."""
    sum_dyn = np.zeros(6)
    sum_kin = np.zeros(6)
    for q in sample_configurations(chain.dof, n_samples, seed):
        dyn, kin = mobility_pair(chain, q)
        sum_dyn += np.diagonal(dyn, axis1=-2, axis2=-1).sum(axis=0)
        sum_kin += np.diagonal(kin, axis1=-2, axis2=-1).sum(axis=0)
    return sum_dyn / n_samples, sum_kin / n_samples


def compute_alpha(chain: ChainModel, n_samples: int = 100_000, seed: int = 0) -> float:
    """Scale matching the mean diagonal of ``J J^T`` to that of ``J H^-1 J^T``.

    ``chain`` should be the conditioned twin. Averaging the per-sample
    matrices first and then their diagonals equals averaging the diagonal
    entries directly, which is what is done here.
    """
    dyn, kin = mean_diagonals(chain, n_samples, seed)
    return float(np.mean(dyn) / np.mean(kin))


class TrackingSession:
    """Streaming IK for a moving target.

    A producer calls :meth:`push` with timestamped targets; the control loop
    calls :meth:`tick`, which runs ``cfg.n_iter`` iterations toward the most
    recent target from the last commanded joint vector. Only one pending
    target is kept, so a newer push replaces an unconsumed older one. The
    error memory ``eps_prev`` survives target changes unless
    ``reset_on_new_target`` is set.
    """

    def __init__(self, chain: ChainModel, q0, cfg: SolverConfig, reset_on_new_target=False):
        self.chain = chain
        self.cfg = cfg
        self.reset_on_new_target = reset_on_new_target
        self.state = SolverState.start(check_q(chain, q0))
        self._lock = threading.Lock()
        self._pending: Optional[tuple] = None
        self._target = None
        self._last_stamp = -np.inf

    def push(self, stamp: float, target) -> None:
        rot, pos = _as_target(target)
        with self._lock:
            if not stamp > self._last_stamp:
                raise TimestampError(f"timestamp {stamp} does not follow {self._last_stamp}")
            self._last_stamp = stamp
            self._pending = (stamp, rot, pos)

    def tick(self) -> np.ndarray:
        with self._lock:
            pending, self._pending = self._pending, None
        if pending is not None:
            if self._target is not None and self.reset_on_new_target:
                self.state = SolverState(self.state.q, np.zeros(6))
            self._target = pending[1:]
        if self._target is None:
            return self.state.q.copy()
        rot, pos = self._target
        q, eps_prev = _run_fd(self.chain, rot, pos, self.state.q, self.state.eps_prev,
                              self.cfg, self.cfg.n_iter, _NO_RECORD)
        self.state = SolverState(q, eps_prev)
        return q.copy()


def track(chain: ChainModel, targets: Iterable, q0, cfg: SolverConfig,
          reset_on_new_target=False) -> np.ndarray:
    """Consume ``(timestamp, target)`` pairs in order; one control tick per target.

    Returns the commanded joint vectors, one row per tick.
    """
    session = TrackingSession(chain, q0, cfg, reset_on_new_target)
    out = []
    for stamp, target in targets:
        session.push(stamp, target)
        out.append(session.tick())
    return np.array(out).reshape(len(out), chain.dof)
