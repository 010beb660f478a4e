"""Compiled numerical kernels shared by kinematics, dynamics and the solvers.

A chain is passed around as the tuple returned by ``ChainModel.arrays``:
``(origin_rot, origin_pos, axes, axis_skew, axis_skew2, tip_rot, tip_pos,
masses, coms, inertias)``. Every kernel works on one configuration; the
``*_batch`` variants loop over rows of ``q``.
"""
import numpy as np
from numba import njit

SMALL_ANGLE = 1e-9

# status codes returned by kernels that factorize H
OK = 0
NOT_SPD = 1


@njit(cache=True)
def rodrigues(r):
    out = np.zeros(3)
    w0 = r[2, 1] - r[1, 2]
    w1 = r[0, 2] - r[2, 0]
    w2 = r[1, 0] - r[0, 1]
    cos_a = (r[0, 0] + r[1, 1] + r[2, 2] - 1.0) / 2.0
    cos_a = min(1.0, max(-1.0, cos_a))
    sin_a = 0.5 * np.sqrt(w0 * w0 + w1 * w1 + w2 * w2)
    angle = np.arctan2(sin_a, cos_a)
    if angle < SMALL_ANGLE:
        return out
    if cos_a > -0.9:
        s = angle / (2.0 * sin_a)
        out[0] = w0 * s
        out[1] = w1 * s
        out[2] = w2 * s
        return out
    # near pi: (R + R^T)/2 - cos(a) I = (1 - cos(a)) k k^T; read k from its dominant column
    one_minus = 1.0 - cos_a
    i = 0
    for k in range(1, 3):
        if r[k, k] > r[i, i]:
            i = k
    bii = (r[i, i] - cos_a) / one_minus
    if bii < 0.0:
        bii = 0.0
    d = np.sqrt(bii)
    for k in range(3):
        b = (0.5 * (r[k, i] + r[i, k]) - (cos_a if k == i else 0.0)) / one_minus
        out[k] = b / d
    nrm = np.sqrt(out[0] ** 2 + out[1] ** 2 + out[2] ** 2)
    sign = 1.0
    if out[0] * w0 + out[1] * w1 + out[2] * w2 < 0.0:
        sign = -1.0
    for k in range(3):
        out[k] = sign * out[k] / nrm * angle
    return out


@njit(cache=True)
def pose_error(target_rot, target_pos, rot, pos):
    eps = np.empty(6)
    for k in range(3):
        eps[k] = target_pos[k] - pos[k]
    rel = target_rot @ rot.T
    eps[3:] = rodrigues(rel)
    return eps


@njit(cache=True)
def frames(arrays, q):
    origin_rot, origin_pos, axes0, k1, k2, tip_rot0, tip_pos0 = arrays[:7]
    n = q.shape[0]
    rot = np.empty((n, 3, 3))
    pos = np.empty((n, 3))
    axes = np.empty((n, 3))
    r_prev = np.eye(3)
    p_prev = np.zeros(3)
    for i in range(n):
        s = np.sin(q[i])
        c = 1.0 - np.cos(q[i])
        local = np.eye(3) + s * k1[i] + c * k2[i]
        r_joint = r_prev @ origin_rot[i]
        p = p_prev + r_prev @ origin_pos[i]
        r_prev = r_joint @ local
        p_prev = p
        rot[i] = r_prev
        pos[i] = p
        axes[i] = r_joint @ axes0[i]
    tip_rot = r_prev @ tip_rot0
    tip_pos = p_prev + r_prev @ tip_pos0
    return rot, pos, axes, tip_rot, tip_pos


@njit(cache=True)
def jacobian(pos, axes, tip_pos):
    n = pos.shape[0]
    jac = np.empty((6, n))
    for i in range(n):
        z = axes[i]
        dx = tip_pos[0] - pos[i, 0]
        dy = tip_pos[1] - pos[i, 1]
        dz = tip_pos[2] - pos[i, 2]
        jac[0, i] = z[1] * dz - z[2] * dy
        jac[1, i] = z[2] * dx - z[0] * dz
        jac[2, i] = z[0] * dy - z[1] * dx
        jac[3, i] = z[0]
        jac[4, i] = z[1]
        jac[5, i] = z[2]
    return jac


@njit(cache=True)
def crba(arrays, rot, pos, axes):
    """Composite Rigid Body Algorithm in base coordinates about the base origin.

    Spatial vectors are ordered (angular, linear). Composite inertias are
    summed from the tip toward the base and projected on the joint motion
    subspaces ``s_i = (z_i, p_i x z_i)``.
    """
    masses, coms, inertias = arrays[7], arrays[8], arrays[9]
    n = pos.shape[0]
    s = np.empty((n, 6))
    for i in range(n):
        z = axes[i]
        p = pos[i]
        s[i, 0] = z[0]
        s[i, 1] = z[1]
        s[i, 2] = z[2]
        s[i, 3] = p[1] * z[2] - p[2] * z[1]
        s[i, 4] = p[2] * z[0] - p[0] * z[2]
        s[i, 5] = p[0] * z[1] - p[1] * z[0]
    comp = np.zeros((6, 6))
    h = np.empty((n, n))
    for j in range(n - 1, -1, -1):
        m = masses[j]
        c = pos[j] + rot[j] @ coms[j]
        ic = rot[j] @ inertias[j] @ rot[j].T
        cx = np.array([[0.0, -c[2], c[1]], [c[2], 0.0, -c[0]], [-c[1], c[0], 0.0]])
        comp[:3, :3] += ic - m * (cx @ cx)
        comp[:3, 3:] += m * cx
        comp[3:, :3] -= m * cx
        for k in range(3):
            comp[3 + k, 3 + k] += m
        f = comp @ s[j]
        for i in range(j + 1):
            v = 0.0
            for k in range(6):
                v += s[i, k] * f[k]
            h[i, j] = v
            h[j, i] = v
    return h


@njit(cache=True)
def cholesky(h):
    n = h.shape[0]
    low = np.zeros((n, n))
    for j in range(n):
        d = h[j, j]
        for k in range(j):
            d -= low[j, k] * low[j, k]
        if not d > 0.0:
            return low, NOT_SPD
        low[j, j] = np.sqrt(d)
        for i in range(j + 1, n):
            v = h[i, j]
            for k in range(j):
                v -= low[i, k] * low[j, k]
            low[i, j] = v / low[j, j]
    return low, OK


@njit(cache=True)
def cho_solve(low, b):
    n = low.shape[0]
    y = np.empty(n)
    for i in range(n):
        v = b[i]
        for k in range(i):
            v -= low[i, k] * y[k]
        y[i] = v / low[i, i]
    x = np.empty(n)
    for i in range(n - 1, -1, -1):
        v = y[i]
        for k in range(i + 1, n):
            v -= low[k, i] * x[k]
        x[i] = v / low[i, i]
    return x


@njit(cache=True)
def mobility(jac, low):
    """``J H^-1 J^T`` from the Cholesky factor of H, symmetrized; also returns the raw asymmetry."""
    n = jac.shape[1]
    x = np.empty((n, 6))
    for c in range(6):
        x[:, c] = cho_solve(low, jac[c].copy())
    m = jac @ x
    drift = 0.0
    for a in range(6):
        for b in range(a + 1, 6):
            d = abs(m[a, b] - m[b, a])
            if d > drift:
                drift = d
            avg = 0.5 * (m[a, b] + m[b, a])
            m[a, b] = avg
            m[b, a] = avg
    return m, drift


@njit(cache=True)
def fd_iterations(arrays, target_rot, target_pos, q0, eps0, kp, kd, dt, n_iter, q_out, eps_out, qdd_out):
    """Run ``n_iter`` forward-dynamics iterations; returns (status, q, eps_prev).

    Per-iteration records are written to the ``*_out`` arrays when they have
    ``n_iter`` rows; pass zero-row arrays to skip recording.
    """
    q = q0.copy()
    eps_prev = eps0.copy()
    use_kd = False
    for k in range(6):
        if kd[k] != 0.0:
            use_kd = True
    for it in range(n_iter):
        rot, pos, axes, tip_rot, tip_pos = frames(arrays, q)
        eps = pose_error(target_rot, target_pos, tip_rot, tip_pos)
        f = kp * eps
        if use_kd:
            f = f + kd * ((eps - eps_prev) / dt)
        jac = jacobian(pos, axes, tip_pos)
        h = crba(arrays, rot, pos, axes)
        low, status = cholesky(h)
        if status != OK:
            return status, q, eps_prev
        qdd = cho_solve(low, jac.T @ f)
        qd = 0.5 * qdd * dt
        q = q + 0.5 * qd * dt
        eps_prev = eps
        if q_out.shape[0] > 0:
            q_out[it] = q
            eps_out[it] = eps
            qdd_out[it] = qdd
    return OK, q, eps_prev


@njit(cache=True)
def jt_iterations(arrays, target_rot, target_pos, q0, alpha, kp, dt, n_iter, q_out, eps_out, qdd_out):
    q = q0.copy()
    for it in range(n_iter):
        rot, pos, axes, tip_rot, tip_pos = frames(arrays, q)
        eps = pose_error(target_rot, target_pos, tip_rot, tip_pos)
        jac = jacobian(pos, axes, tip_pos)
        qdd = alpha * (jac.T @ (kp * eps))
        qd = 0.5 * qdd * dt
        q = q + 0.5 * qd * dt
        if q_out.shape[0] > 0:
            q_out[it] = q
            eps_out[it] = eps
            qdd_out[it] = qdd
    return q


# ---------------------------------------------------------------- batches

@njit(cache=True)
def fk_batch(arrays, qs):
    b = qs.shape[0]
    rots = np.empty((b, 3, 3))
    poss = np.empty((b, 3))
    for k in range(b):
        _, _, _, tip_rot, tip_pos = frames(arrays, qs[k])
        rots[k] = tip_rot
        poss[k] = tip_pos
    return rots, poss


@njit(cache=True)
def jacobian_batch(arrays, qs):
    b, n = qs.shape
    out = np.empty((b, 6, n))
    for k in range(b):
        _, pos, axes, _, tip_pos = frames(arrays, qs[k])
        out[k] = jacobian(pos, axes, tip_pos)
    return out


@njit(cache=True)
def inertia_batch(arrays, qs):
    b, n = qs.shape
    out = np.empty((b, n, n))
    for k in range(b):
        rot, pos, axes, _, _ = frames(arrays, qs[k])
        out[k] = crba(arrays, rot, pos, axes)
    return out


@njit(cache=True)
def mobility_batch(arrays, qs):
    """Returns (J H^-1 J^T, J J^T, status, max asymmetry) for every row of ``qs``."""
    b = qs.shape[0]
    dyn = np.empty((b, 6, 6))
    kin = np.empty((b, 6, 6))
    worst = 0.0
    for k in range(b):
        rot, pos, axes, _, tip_pos = frames(arrays, qs[k])
        jac = jacobian(pos, axes, tip_pos)
        low, status = cholesky(crba(arrays, rot, pos, axes))
        if status != OK:
            return dyn, kin, status, worst
        m, drift = mobility(jac, low)
        scale = max(1.0, np.max(np.abs(m)))
        if drift / scale > worst:
            worst = drift / scale
        dyn[k] = m
        kin[k] = jac @ jac.T
    return dyn, kin, OK, worst
