"""Experiment runners: homogenization statistics, step response, square
interpolation and moving-target tracking. Each runner returns its data and
writes a CSV with a fixed header.

Scenario conventions (the geometry is only known pictorially):

* start configuration ``(0, -pi/2, pi/2, 0, pi/2, 0)`` for every experiment;
* step target: tip pose at the start, shifted by (0.3, 0.3, -0.2) m in the
  base frame and rotated 20 deg about the base axis (1, 1, 1)/sqrt(3);
* square: side 0.4 m in the base y-z plane, centred at the start tip
  position, orientation held at the start orientation, corners visited
  counter-clockwise seen from +x.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig
from .dynamics import mobility_pair, task_space_mobility
from .kinematics import forward_kinematics, forward_kinematics_batch
from .model import ChainModel, conditioned
from .solver import (BaselineConfig, SolverConfig, compute_alpha, sample_configurations, solve_fd,
                     solve_jt, track)
from .spatial import Transform, axis_angle_to_rotation, pose_error

log = logging.getLogger(__name__)

START_Q = np.array([0.0, -np.pi / 2, np.pi / 2, 0.0, np.pi / 2, 0.0])
# iterations used to put the arm on a square corner before an experiment
CORNER_SETTLE = SolverConfig(dt=1.0, n_iter=400)

HOMOGENIZATION_HEADER = ["variant", "entry_row", "entry_col", "mean", "variance", "std"]
STEP_HEADER = ["iter", "ex", "ey", "ez", "erx", "ery", "erz", "solver"]
SQUARE_HEADER = ["solver", "corner", "step", "x", "y", "z"]
SQUARE_METRICS_HEADER = ["solver", "corner", "mean_dev", "max_dev", "final_dist"]
TRACK_HEADER = ["gain", "t", "x", "y", "z", "err_trans", "err_rot"]

VARIANTS = ("kinematic", "uniform", "twin")


def _num(x):
    return repr(float(x))


def _write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


# ------------------------------------------------------------------ moments

class RunningMoments:
    """Per-entry mean and population variance, accumulated batch by batch.

    Batches are combined with the pairwise update of Chan et al., so the
    result does not depend on how the samples were split.
    """

    def __init__(self, shape):
        self.count = 0
        self.mean = np.zeros(shape)
        self.m2 = np.zeros(shape)

    def update(self, batch):
        batch = np.asarray(batch, dtype=float)
        other = RunningMoments(self.mean.shape)
        other.count = len(batch)
        other.mean = batch.mean(axis=0)
        other.m2 = ((batch - other.mean) ** 2).sum(axis=0)
        self.merge(other)

    def merge(self, other):
        if other.count == 0:
            return self
        n = self.count + other.count
        delta = other.mean - self.mean
        self.mean = self.mean + delta * (other.count / n)
        self.m2 = self.m2 + other.m2 + delta ** 2 * (self.count * other.count / n)
        self.count = n
        return self

    @property
    def variance(self):
        return self.m2 / self.count

    @property
    def std(self):
        return np.sqrt(self.variance)


@dataclass
class HomogenizationStats:
    variant: str
    mean: np.ndarray
    variance: np.ndarray
    std: np.ndarray
    count: int

    def rows(self):
        for r in range(6):
            for c in range(6):
                yield [self.variant, r, c, _num(self.mean[r, c]), _num(self.variance[r, c]),
                       _num(self.std[r, c])]


def homogenization_stats(chain: ChainModel, n_samples, seed, mass=1.0, inertia=None):
    """Statistics of J J^T, uniform-model J H^-1 J^T and twin J H^-1 J^T over the same samples."""
    inertia = np.eye(3) if inertia is None else np.asarray(inertia, dtype=float)
    models = {v: conditioned(chain, v, mass, inertia) for v in ("uniform", "twin")}
    moments = {v: RunningMoments((6, 6)) for v in VARIANTS}
    for q in sample_configurations(chain.dof, n_samples, seed):
        dyn_twin, kin = mobility_pair(models["twin"], q)
        moments["kinematic"].update(kin)
        moments["twin"].update(dyn_twin)
        moments["uniform"].update(task_space_mobility(models["uniform"], q))
    return {v: HomogenizationStats(v, m.mean, m.variance, m.std, m.count) for v, m in moments.items()}


def run_homogenization(cfg: ExperimentConfig):
    stats = homogenization_stats(cfg.base_chain(), cfg.samples, cfg.seed, cfg.mass, cfg.inertia)
    out = Path(cfg.out_dir)
    for v, s in stats.items():
        _write_csv(out / f"homogenization_{v}.csv", HOMOGENIZATION_HEADER, s.rows())
    path = _write_csv(out / "homogenization.csv", HOMOGENIZATION_HEADER,
                      (row for v in VARIANTS for row in stats[v].rows()))
    return stats, path


# ------------------------------------------------------------- step response

def _fd_chain(cfg: ExperimentConfig):
    if cfg.conditioning == "kinematic":
        raise ConfigError("the forward-dynamics solver needs a dynamics model (twin or uniform)")
    return cfg.chain()


def _solver_config(cfg: ExperimentConfig, dt, iters):
    return SolverConfig(kp=cfg.kp, kd=cfg.kd, dt=cfg.dt or dt, n_iter=cfg.iters or iters)


def resolve_alpha(cfg: ExperimentConfig, chain: ChainModel) -> float:
    if cfg.alpha is not None:
        return float(cfg.alpha)
    alpha = compute_alpha(chain, cfg.samples, cfg.seed)
    log.info("alpha = %.6f from %d samples (seed %d)", alpha, cfg.samples, cfg.seed)
    return alpha


def step_target(chain: ChainModel, cfg: ExperimentConfig) -> Transform:
    start = forward_kinematics(chain, START_Q)
    axis = np.asarray(cfg.step_axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    rot = axis_angle_to_rotation(axis, np.deg2rad(cfg.step_angle_deg)) @ start.rotation
    return Transform(rot, start.translation + np.asarray(cfg.step_offset, dtype=float))


def overshoot_dimensions(eps, tol=1e-6):
    """Number of error dimensions whose sign flips at least once.

    Entries with magnitude below ``tol`` count as zero so that round-off
    around a converged value is not read as overshoot.
    """
    count = 0
    for d in range(eps.shape[1]):
        e = eps[:, d]
        signs = np.sign(e[np.abs(e) > tol])
        count += int(np.any(signs[1:] != signs[:-1]))
    return count


def run_step_response(cfg: ExperimentConfig):
    chain = _fd_chain(cfg)
    target = step_target(chain, cfg)
    fd_cfg = _solver_config(cfg, dt=1.0, iters=150)
    alpha = resolve_alpha(cfg, chain)
    jt_cfg = BaselineConfig(alpha, kp=fd_cfg.kp, dt=fd_cfg.dt, n_iter=fd_cfg.n_iter)
    fd = solve_fd(chain, target, START_Q, fd_cfg)
    jt = solve_jt(chain, target, START_Q, jt_cfg)
    rows = [[i + 1, *map(_num, e), name] for name, tr in (("fd", fd), ("jt", jt))
            for i, e in enumerate(tr.eps)]
    path = _write_csv(Path(cfg.out_dir) / "step.csv", STEP_HEADER, rows)
    return {"fd": fd, "jt": jt, "alpha": alpha}, path


# ---------------------------------------------------------- square interpolation

def square_corners(chain: ChainModel, side):
    center = forward_kinematics(chain, START_Q).translation
    h = side / 2.0
    return np.array([center + [0.0, sy * h, sz * h] for sy, sz in ((-1, -1), (1, -1), (1, 1), (-1, 1))])


def settle_on(chain: ChainModel, q, target: Transform):
    return solve_fd(chain, target, q, CORNER_SETTLE).q_final


def interpolate_segment(chain, q_start, target, solve, cfg, steps):
    """Run ``steps`` solver calls toward a fixed target, each from the previous result.

    Returns the tip positions after every call, shape ``(steps, 3)``.
    """
    q = np.array(q_start, dtype=float)
    qs = np.empty((steps, chain.dof))
    for k in range(steps):
        q = solve(chain, target, q, cfg).q_final
        qs[k] = q
    return forward_kinematics_batch(chain, qs)[1]


def segment_deviation(points, a, b):
    """Perpendicular distances of ``points`` from the line through ``a`` and ``b``."""
    d = points - a
    u = b - a
    length = np.linalg.norm(u)
    if length == 0.0:
        return np.linalg.norm(d, axis=1)
    u = u / length
    return np.linalg.norm(d - np.outer(d @ u, u), axis=1)


def run_square_interpolation(cfg: ExperimentConfig):
    chain = _fd_chain(cfg)
    fd_cfg = _solver_config(cfg, dt=0.1, iters=50)
    jt_cfg = BaselineConfig(resolve_alpha(cfg, chain), kp=fd_cfg.kp, dt=fd_cfg.dt, n_iter=fd_cfg.n_iter)
    rot = forward_kinematics(chain, START_Q).rotation
    corners = square_corners(chain, cfg.square_side)
    starts = [settle_on(chain, START_Q, Transform(rot, c)) for c in corners]
    paths, metrics = {}, []
    for k in range(4):
        a, b = corners[k], corners[(k + 1) % 4]
        target = Transform(rot, b)
        for name, solve, scfg in (("fd", solve_fd, fd_cfg), ("jt", solve_jt, jt_cfg)):
            pts = interpolate_segment(chain, starts[k], target, solve, scfg, cfg.square_steps)
            dev = segment_deviation(pts, a, b)
            paths[name, k] = pts
            metrics.append({"solver": name, "corner": k, "mean_dev": float(dev.mean()),
                            "max_dev": float(dev.max()),
                            "final_dist": float(np.linalg.norm(pts[-1] - b))})
    out = Path(cfg.out_dir)
    rows = [[name, k, i, *map(_num, p)] for name in ("fd", "jt") for k in range(4)
            for i, p in enumerate(paths[name, k])]
    path = _write_csv(out / "square.csv", SQUARE_HEADER, rows)
    _write_csv(out / "square_metrics.csv", SQUARE_METRICS_HEADER,
               [[m["solver"], m["corner"], _num(m["mean_dev"]), _num(m["max_dev"]), _num(m["final_dist"])]
                for m in metrics])
    return {"paths": paths, "metrics": metrics, "corners": corners}, path


# ------------------------------------------------------------------ tracking

def square_path(corners, speed, rate, laps=1):
    """Timestamps and positions of a target moving along the closed square at constant speed."""
    side_lengths = np.linalg.norm(np.roll(corners, -1, axis=0) - corners, axis=1)
    perimeter = side_lengths.sum()
    n = max(1, int(round(laps * perimeter / speed * rate)))
    t = np.arange(n) / rate
    if perimeter == 0.0:
        return t, np.repeat(corners[:1], n, axis=0)
    s = np.mod(speed * t, perimeter)
    bounds = np.concatenate([[0.0], np.cumsum(side_lengths)])
    k = np.clip(np.searchsorted(bounds, s, side="right") - 1, 0, 3)
    frac = (s - bounds[k]) / np.where(side_lengths[k] > 0, side_lengths[k], 1.0)
    pos = corners[k] + frac[:, None] * (np.roll(corners, -1, axis=0)[k] - corners[k])
    return t, pos


def distance_to_polygon(points, corners):
    """Distance of each point to the closed polyline through ``corners``."""
    best = np.full(len(points), np.inf)
    for a, b in zip(corners, np.roll(corners, -1, axis=0)):
        u = b - a
        uu = u @ u
        t = np.zeros(len(points)) if uu == 0 else np.clip((points - a) @ u / uu, 0.0, 1.0)
        best = np.minimum(best, np.linalg.norm(points - (a + t[:, None] * u), axis=1))
    return best


def tracking_errors(chain, qs, targets_rot, targets_pos):
    rots, pos = forward_kinematics_batch(chain, qs)
    err_t = np.linalg.norm(targets_pos - pos, axis=1)
    err_r = np.array([np.linalg.norm(pose_error(Transform(targets_rot, p), Transform(r, x)).rotational)
                      for r, x, p in zip(rots, pos, targets_pos)])
    return pos, err_t, err_r


def run_tracking(cfg: ExperimentConfig):
    chain = _fd_chain(cfg)
    base = _solver_config(cfg, dt=0.1, iters=10)
    rot = forward_kinematics(chain, START_Q).rotation
    corners = square_corners(chain, cfg.square_side)
    t, pos = square_path(corners, cfg.speed, cfg.rate)
    q0 = settle_on(chain, START_Q, Transform(rot, pos[0]))
    targets = [Transform(rot, p) for p in pos]
    results = {}
    rows = []
    for gain in cfg.gains:
        qs = track(chain, zip(t, targets), q0, base.scaled(gain))
        tip, err_t, err_r = tracking_errors(chain, qs, rot, pos)
        results[gain] = {"q": qs, "tip": tip, "err_trans": err_t, "err_rot": err_r,
                         "corner_dev": distance_to_polygon(tip, corners)}
        rows += [[_num(gain), _num(ti), *map(_num, p), _num(et), _num(er)]
                 for ti, p, et, er in zip(t, tip, err_t, err_r)]
    path = _write_csv(Path(cfg.out_dir) / "track.csv", TRACK_HEADER, rows)
    return {"t": t, "targets": pos, "corners": corners, "gains": results}, path
