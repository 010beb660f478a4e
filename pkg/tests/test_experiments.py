import csv

import numpy as np
import pytest

from fdik import experiments as ex
from fdik.config import ConfigError, ExperimentConfig
from fdik.kinematics import forward_kinematics
from fdik.plots import SchemaError, emit_plots, read_csv
from fdik.solver import SolverConfig, solve_fd, track
from fdik.spatial import Transform


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture
def small(tmp_path):
    """Reduced workloads with a fixed baseline scale so no sampling is needed."""
    return dict(out_dir=str(tmp_path), alpha=0.79, samples=300, square_steps=20)


def test_running_moments_match_two_pass(rng):
    data = rng.normal(3.0, 2.0, (10_000, 6, 6)) * rng.uniform(0.1, 10, (6, 6))
    m = ex.RunningMoments((6, 6))
    for chunk in np.array_split(data, [7, 1000, 1001, 5555]):
        m.update(chunk)
    np.testing.assert_allclose(m.mean, data.mean(axis=0), rtol=1e-9)
    np.testing.assert_allclose(m.variance, data.var(axis=0), rtol=1e-9)
    np.testing.assert_allclose(m.std, np.sqrt(m.variance), rtol=1e-12)


def test_running_moments_merge_is_split_independent(rng):
    data = rng.normal(size=(500, 2))
    a, b, whole = ex.RunningMoments(2), ex.RunningMoments(2), ex.RunningMoments(2)
    a.update(data[:123])
    b.update(data[123:])
    whole.update(data)
    a.merge(b)
    np.testing.assert_allclose(a.mean, whole.mean, rtol=1e-13)
    np.testing.assert_allclose(a.variance, whole.variance, rtol=1e-12)


def test_homogenization_single_sample_has_zero_variance(ur10):
    stats = ex.homogenization_stats(ur10, 1, 0)
    for s in stats.values():
        assert np.all(s.variance == 0.0)
        assert s.count == 1


def test_homogenization_outputs(small):
    stats, path = ex.run_homogenization(ExperimentConfig(**small))
    body = rows(path)
    assert body[0] == ex.HOMOGENIZATION_HEADER
    assert len(body) == 1 + 3 * 36
    for v in ex.VARIANTS:
        assert len(rows(path.parent / f"homogenization_{v}.csv")) == 37
        assert np.all(stats[v].variance >= 0)
        np.testing.assert_allclose(stats[v].std, np.sqrt(stats[v].variance), rtol=1e-12)


def test_step_response_rows_and_zero_offset(small):
    res, path = ex.run_step_response(ExperimentConfig(**small))
    body = rows(path)
    assert body[0] == ex.STEP_HEADER
    assert len(body) == 1 + 2 * 150
    assert [r[0] for r in body[1:151]] == [str(i) for i in range(1, 151)]
    assert res["alpha"] == 0.79

    res, path = ex.run_step_response(ExperimentConfig(**small, step_offset=[0, 0, 0], step_angle_deg=0.0))
    for r in rows(path)[1:]:
        assert all(float(x) == 0.0 for x in r[1:7])


def test_step_iters_override(small):
    res, path = ex.run_step_response(ExperimentConfig(**small, iters=12))
    assert len(res["fd"]) == 12 and len(rows(path)) == 1 + 24


def test_overshoot_counter():
    eps = np.array([[1.0, 1.0, 1e-9], [-0.5, 0.5, -1e-9], [0.1, 0.2, 1e-9]])
    assert ex.overshoot_dimensions(eps) == 1
    assert ex.overshoot_dimensions(eps, tol=0.0) == 2


def test_square_outputs(small):
    res, path = ex.run_square_interpolation(ExperimentConfig(**small))
    body = rows(path)
    assert body[0] == ex.SQUARE_HEADER
    assert len(body) == 1 + 2 * 4 * 20
    metrics = rows(path.parent / "square_metrics.csv")
    assert metrics[0] == ex.SQUARE_METRICS_HEADER and len(metrics) == 9
    corners = res["corners"]
    np.testing.assert_allclose(np.abs(corners - corners.mean(axis=0))[:, 1:], 0.2, atol=1e-12)
    np.testing.assert_allclose(corners[:, 0], corners[0, 0])


def test_degenerate_corner_stays_put(twin, tmp_path):
    # target equal to the start: every interpolated point is the start point
    start = forward_kinematics(twin, ex.START_Q)
    pts = ex.interpolate_segment(twin, ex.START_Q, start, solve_fd, SolverConfig(dt=0.1, n_iter=50), 25)
    assert np.all(pts == start.translation)
    res, _ = ex.run_square_interpolation(ExperimentConfig(alpha=0.79, square_side=0.0, square_steps=5,
                                                          out_dir=str(tmp_path)))
    assert all(m["max_dev"] < 1e-12 for m in res["metrics"])


def test_segment_deviation():
    a, b = np.zeros(3), np.array([1.0, 0, 0])
    pts = np.array([[0.5, 0.1, 0.0], [2.0, 0.0, -0.3]])
    np.testing.assert_allclose(ex.segment_deviation(pts, a, b), [0.1, 0.3])


def test_square_path_geometry():
    corners = np.array([[0, -1, -1], [0, 1, -1], [0, 1, 1], [0, -1, 1]], dtype=float)
    t, pos = ex.square_path(corners, speed=2.0, rate=10)
    assert len(t) == 40
    np.testing.assert_allclose(np.diff(t), 0.1)
    np.testing.assert_allclose(ex.distance_to_polygon(pos, corners), 0.0, atol=1e-12)
    steps = np.linalg.norm(np.diff(pos, axis=0), axis=1)
    # constant speed except where the path turns a corner
    assert np.sum(np.abs(steps - 0.2) > 1e-12) <= 3


def test_tracking_outputs(small):
    res, path = ex.run_tracking(ExperimentConfig(**small, gains=[5.0, 50.0], speed=2.0))
    n = len(res["t"])
    body = rows(path)
    assert body[0] == ex.TRACK_HEADER and len(body) == 1 + 2 * n
    for g in (5.0, 50.0):
        assert res["gains"][g]["q"].shape == (n, 6)


def test_tracking_stationary_target_decays(twin):
    start = forward_kinematics(twin, ex.START_Q)
    target = Transform(start.rotation, start.translation + [0.05, 0.05, 0.0])
    qs = track(twin, [(0.01 * k, target) for k in range(600)], ex.START_Q, SolverConfig(dt=0.1, n_iter=10))
    _, err, _ = ex.tracking_errors(twin, qs, target.rotation, np.tile(target.translation, (600, 1)))
    assert err[-1] < 1e-3 * err[0]
    assert np.all(np.diff(err) <= 0)


@pytest.mark.parametrize("runner", [ex.run_homogenization, ex.run_step_response, ex.run_square_interpolation,
                                    ex.run_tracking])
def test_runners_are_byte_reproducible(runner, small, tmp_path):
    cfg_a = ExperimentConfig(**{**small, "out_dir": str(tmp_path / "a")}, speed=2.0)
    cfg_b = ExperimentConfig(**{**small, "out_dir": str(tmp_path / "b")}, speed=2.0)
    _, pa = runner(cfg_a)
    _, pb = runner(cfg_b)
    assert pa.read_bytes() == pb.read_bytes()


def test_kinematic_conditioning_rejected_for_solvers(small):
    with pytest.raises(ConfigError):
        ex.run_step_response(ExperimentConfig(**small, conditioning="kinematic"))


# -------------------------------------------------------------------- plots

def test_plots_are_deterministic(small, tmp_path):
    cfg = ExperimentConfig(**small, speed=2.0)
    paths = [ex.run_homogenization(cfg)[1], ex.run_step_response(cfg)[1],
             ex.run_square_interpolation(cfg)[1], ex.run_tracking(cfg)[1]]
    (tmp_path / "one").mkdir()
    (tmp_path / "two").mkdir()
    first = [p.read_bytes() for p in emit_plots(paths, tmp_path / "one")]
    second = [p.read_bytes() for p in emit_plots(paths, tmp_path / "two")]
    assert first == second
    assert all(b.startswith(b"<?xml") for b in first)


def test_plot_schema_errors(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(SchemaError):
        emit_plots([empty])
    foreign = tmp_path / "foreign.csv"
    foreign.write_text("a,b\n1,2\n")
    with pytest.raises(SchemaError):
        read_csv(foreign)
    header_only = tmp_path / "step.csv"
    header_only.write_text(",".join(ex.STEP_HEADER) + "\n")
    with pytest.raises(SchemaError):
        read_csv(header_only)
    ragged = tmp_path / "ragged.csv"
    ragged.write_text(",".join(ex.STEP_HEADER) + "\n1,2\n")
    with pytest.raises(SchemaError):
        read_csv(ragged)
