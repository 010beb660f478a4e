"""Reference implementations that share no code with the package kernels.

Everything here is written with plain 4x4 homogeneous matrices and explicit
loops so that it can serve as an independent check.
"""
import numpy as np

from fdik.model import ChainModel, JointSpec, LinkInertia
from fdik.spatial import Transform


def rot_about(axis, angle):
    """Rodrigues' rotation formula, written out."""
    x, y, z = np.asarray(axis, dtype=float) / np.linalg.norm(axis)
    c, s = np.cos(angle), np.sin(angle)
    C = 1.0 - c
    return np.array([
        [c + x * x * C, x * y * C - z * s, x * z * C + y * s],
        [y * x * C + z * s, c + y * y * C, y * z * C - x * s],
        [z * x * C - y * s, z * y * C + x * s, c + z * z * C],
    ])


def homogeneous(rot, trans):
    m = np.eye(4)
    m[:3, :3] = rot
    m[:3, 3] = trans
    return m


def link_frames(chain, q):
    """World 4x4 frame of every joint (after its rotation) and the tip frame."""
    t = np.eye(4)
    frames = []
    for joint, qi in zip(chain.joints, q):
        t = t @ homogeneous(joint.origin.rotation, joint.origin.translation)
        t = t @ homogeneous(rot_about(joint.axis, qi), np.zeros(3))
        frames.append(t.copy())
    tip = t @ homogeneous(chain.tip.rotation, chain.tip.translation)
    return frames, tip


def fk(chain, q):
    return link_frames(chain, q)[1]


def point_jacobian(chain, frames, point, upto):
    """6xn Jacobian of a point rigidly attached to link ``upto``."""
    n = chain.dof
    jac = np.zeros((6, n))
    for j in range(upto + 1):
        z = frames[j][:3, :3] @ chain.joints[j].axis
        p = frames[j][:3, 3]
        jac[:3, j] = np.cross(z, point - p)
        jac[3:, j] = z
    return jac


def jacobian(chain, q):
    frames, tip = link_frames(chain, q)
    return point_jacobian(chain, frames, tip[:3, 3], chain.dof - 1)


def inertia_by_link_jacobians(chain, q):
    """H = sum_i J_i^T M_i J_i with J_i the com Jacobian of link i."""
    frames, _ = link_frames(chain, q)
    h = np.zeros((chain.dof, chain.dof))
    for i, link in enumerate(chain.links):
        rot = frames[i][:3, :3]
        com = frames[i][:3, :3] @ link.com + frames[i][:3, 3]
        j = point_jacobian(chain, frames, com, i)
        spatial = np.zeros((6, 6))
        spatial[:3, :3] = link.mass * np.eye(3)
        spatial[3:, 3:] = rot @ link.inertia @ rot.T
        h += j.T @ spatial @ j
    return h


def fd_jacobian(fk_fn, q, h=1e-6):
    """Central differences of position and of the rotation (via R' R^T)."""
    n = len(q)
    jac = np.zeros((6, n))
    for i in range(n):
        dq = np.zeros(n)
        dq[i] = h
        tp, tm = fk_fn(q + dq), fk_fn(q - dq)
        jac[:3, i] = (tp[:3, 3] - tm[:3, 3]) / (2 * h)
        w = (tp[:3, :3] - tm[:3, :3]) / (2 * h) @ fk_fn(q)[:3, :3].T
        jac[3:, i] = [w[2, 1], w[0, 2], w[1, 0]]
    return jac


# ---------------------------------------------------------------- test chains

def one_dof(mass=1.0, lever=1.0):
    """Single z-joint with a point mass on the tip at distance ``lever`` along x."""
    joint = JointSpec("j0", Transform(), [0.0, 0.0, 1.0])
    link = LinkInertia(mass, [lever, 0.0, 0.0], np.zeros((3, 3)))
    return ChainModel((joint,), (link,), Transform(np.eye(3), [lever, 0.0, 0.0]), "one_dof")


def planar_three(lengths=(0.5, 0.4, 0.3), masses=(2.0, 1.5, 1.0)):
    """Three parallel z-joints; each link a slender rod along x."""
    joints, links = [], []
    offset = 0.0
    for k, (length, m) in enumerate(zip(lengths, masses)):
        joints.append(JointSpec(f"j{k}", Transform(np.eye(3), [offset, 0.0, 0.0]), [0, 0, 1]))
        rod = m * length ** 2 / 12.0
        links.append(LinkInertia(m, [length / 2, 0.0, 0.0], np.diag([1e-4, rod, rod])))
        offset = length
    return ChainModel(tuple(joints), tuple(links), Transform(np.eye(3), [lengths[-1], 0, 0]), "planar3")


def random_rotation(rng):
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])
