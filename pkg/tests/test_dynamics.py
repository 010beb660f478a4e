import numpy as np
import pytest

from fdik.dynamics import (DegenerateModelError, apply_inverse_inertia, joint_space_inertia, kinematic_mobility,
                           mobility_pair, task_space_mobility)
from fdik.kinematics import geometric_jacobian
from fdik.model import ChainModel, LinkInertia

from oracles import inertia_by_link_jacobians, one_dof, planar_three


@pytest.mark.parametrize("mass, lever", [(1.0, 1.0), (2.5, 0.3), (0.1, 4.0)])
def test_point_mass_closed_form(mass, lever, rng):
    chain = one_dof(mass, lever)
    for q in rng.uniform(-np.pi, np.pi, 5):
        np.testing.assert_allclose(joint_space_inertia(chain, [q]), [[mass * lever ** 2]], rtol=1e-14)
        m_inv = task_space_mobility(chain, [q])
        # tangential tip direction: lever^2 / (m lever^2); spin about z: 1 / (m lever^2)
        t = np.array([-np.sin(q), np.cos(q), 0, 0, 0, 0])
        assert t @ m_inv @ t == pytest.approx(1.0 / mass, rel=1e-12)
        assert m_inv[5, 5] == pytest.approx(1.0 / (mass * lever ** 2), rel=1e-12)


def test_tip_offset_without_mass_changes_only_lever_arm():
    # same mass, a longer massless flange: H unchanged, linear mobility scales with the lever squared
    short = one_dof(1.0, 1.0)
    long_tip = ChainModel(short.joints, short.links, type(short.tip)(np.eye(3), [2.0, 0, 0]))
    np.testing.assert_array_equal(joint_space_inertia(short, [0.3]), joint_space_inertia(long_tip, [0.3]))
    assert task_space_mobility(long_tip, [0.0])[1, 1] == pytest.approx(4.0, rel=1e-14)


def test_planar_three_matches_oracle(rng):
    chain = planar_three()
    for q in rng.uniform(-np.pi, np.pi, (50, 3)):
        np.testing.assert_allclose(joint_space_inertia(chain, q), inertia_by_link_jacobians(chain, q), atol=1e-12)


@pytest.mark.parametrize("variant", ["ur10", "twin", "uniform"])
def test_ur10_variants_match_oracle(variant, request, rng):
    chain = request.getfixturevalue(variant)
    for q in rng.uniform(-np.pi, np.pi, (30, 6)):
        h = joint_space_inertia(chain, q)
        np.testing.assert_allclose(h, inertia_by_link_jacobians(chain, q), atol=1e-9)
        assert np.max(np.abs(h - h.T)) <= 1e-10
        np.linalg.cholesky(h)


def test_inertia_batch_shape(twin, rng):
    qs = rng.uniform(-np.pi, np.pi, (3, 4, 6))
    h = joint_space_inertia(twin, qs)
    assert h.shape == (3, 4, 6, 6)
    np.testing.assert_array_equal(h[2, 1], joint_space_inertia(twin, qs[2, 1]))


def test_apply_inverse_examples(rng):
    v = rng.normal(size=5)
    np.testing.assert_array_equal(apply_inverse_inertia(np.eye(5), v), v)
    np.testing.assert_allclose(apply_inverse_inertia(2 * np.eye(4), np.ones(4)), 0.5 * np.ones(4), rtol=1e-15)


def test_apply_inverse_residual(rng):
    for n in (1, 2, 6, 9):
        for _ in range(20):
            a = rng.normal(size=(n, n))
            h = a @ a.T + 0.1 * np.eye(n)
            v = rng.normal(size=n)
            x = apply_inverse_inertia(h, v)
            assert np.linalg.norm(h @ x - v) / np.linalg.norm(v) < 1e-10


def test_apply_inverse_rejects_indefinite():
    with pytest.raises(DegenerateModelError):
        apply_inverse_inertia(np.diag([1.0, -1.0]), np.ones(2))
    with pytest.raises(ValueError):
        apply_inverse_inertia(np.eye(2), np.ones(3))


def test_massless_chain_is_degenerate(ur10):
    empty = ur10.with_links([LinkInertia(0.0)] * 6)
    with pytest.raises(DegenerateModelError):
        task_space_mobility(empty, np.zeros(6))


def test_mobility_matches_dense_formula(twin, rng):
    for q in rng.uniform(-np.pi, np.pi, (20, 6)):
        j = geometric_jacobian(twin, q)
        h = joint_space_inertia(twin, q)
        m_inv = task_space_mobility(twin, q)
        np.testing.assert_allclose(m_inv, j @ np.linalg.solve(h, j.T), atol=1e-9)
        np.testing.assert_array_equal(m_inv, m_inv.T)
        assert np.min(np.linalg.eigvalsh(m_inv)) >= -1e-9


def test_twin_mobility_symmetric_at_zero(twin):
    m_inv = task_space_mobility(twin, np.zeros(6))
    assert np.max(np.abs(m_inv - m_inv.T)) <= 1e-9


def test_twin_mean_diagonal_near_one(twin):
    qs = np.random.default_rng(0).uniform(-np.pi, np.pi, (1000, 6))
    diag = np.diagonal(task_space_mobility(twin, qs), axis1=1, axis2=2).mean(axis=0)
    np.testing.assert_allclose(diag, 1.0, atol=0.1)


def test_pair_agrees_with_individual_calls(twin, rng):
    qs = rng.uniform(-np.pi, np.pi, (10, 6))
    dyn, kin = mobility_pair(twin, qs)
    np.testing.assert_allclose(dyn, task_space_mobility(twin, qs), rtol=0, atol=0)
    np.testing.assert_allclose(kin, kinematic_mobility(twin, qs), atol=1e-14)
