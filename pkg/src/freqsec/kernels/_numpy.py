import math

import numpy as np


def _rhs(t, y, h, f0, p_loss, damping, kind, r, tr, d, gain, tau, db, out):
    df = y[0]
    total = 0.0
    m = len(kind)
    for j in range(m):
        if kind[j] == 0:
            v = r[j] * (t - d[j]) / tr[j]
            v = min(max(v, 0.0), r[j])
            out[1 + j] = 0.0
        else:
            x = y[1 + j]
            drive = gain[j] * max(-df - db[j], 0.0)
            out[1 + j] = (drive - x) / tau[j]
            v = min(max(x, 0.0), r[j])
        total += v
    out[0] = f0 / (2.0 * h) * (total - p_loss - damping * df)


def _outputs(t, y, kind, r, tr, d, fr_row):
    for j in range(len(kind)):
        if kind[j] == 0:
            v = r[j] * (t - d[j]) / tr[j]
            fr_row[j] = min(max(v, 0.0), r[j])
        else:
            fr_row[j] = min(max(y[1 + j], 0.0), r[j])


def simulate_swing(h, f0, p_loss, damping, dt, n_steps, kind, r, tr, d, gain, tau, db, rk4=True):
    """Fixed-step integration of the swing equation with per-provider FR.

    Provider kind 0 injects the delayed linear ramp exactly; kind 1 is a
    first-order lag on ``gain * (|df| - deadband)`` saturated at ``r``.
    Returns (t, df, fr) with fr of shape (n_steps + 1, providers).
    """
    kind = [int(k) for k in kind]
    r, tr, d, gain, tau, db = (list(map(float, a)) for a in (r, tr, d, gain, tau, db))
    m = len(kind)
    t = np.arange(n_steps + 1) * dt
    df = np.zeros(n_steps + 1)
    fr = np.zeros((n_steps + 1, m))
    y = [0.0] * (m + 1)
    k1, k2, k3, k4 = ([0.0] * (m + 1) for _ in range(4))
    tmp = [0.0] * (m + 1)
    row = [0.0] * m
    args = (h, f0, p_loss, damping, kind, r, tr, d, gain, tau, db)
    _outputs(0.0, y, kind, r, tr, d, row)
    fr[0] = row
    n = m + 1
    for i in range(n_steps):
        ti = t[i]
        _rhs(ti, y, *args, k1)
        if rk4:
            for q in range(n):
                tmp[q] = y[q] + 0.5 * dt * k1[q]
            _rhs(ti + 0.5 * dt, tmp, *args, k2)
            for q in range(n):
                tmp[q] = y[q] + 0.5 * dt * k2[q]
            _rhs(ti + 0.5 * dt, tmp, *args, k3)
            for q in range(n):
                tmp[q] = y[q] + dt * k3[q]
            _rhs(ti + dt, tmp, *args, k4)
            for q in range(n):
                y[q] += dt / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q])
        else:
            for q in range(n):
                y[q] += dt * k1[q]
        df[i + 1] = y[0]
        _outputs(t[i + 1], y, kind, r, tr, d, row)
        fr[i + 1] = row
    return t, df, fr


def batch_security(alloc, c_end, c1, c2, c3, p_loss, inertia, f0, delta_f_max, rtol):
    """Steady-state and nadir checks for many allocation vectors at once.

    ``c_end[n] @ R`` is FR at the end of interval n; ``c1``, ``c2``, ``c3``
    map R to the interval's cone terms. Returns (steady_ok, nadir_ok, interval).
    """
    alloc = np.atleast_2d(alloc)
    npts = alloc.shape[0]
    total = alloc.sum(axis=1)
    tol = 1e-9 * max(p_loss, 1.0)
    ss_ok = total >= p_loss - rtol * max(p_loss, 1.0)
    fr_end = alloc @ c_end.T
    reached = fr_end >= p_loss - tol
    interval = np.where(reached.any(axis=1), reached.argmax(axis=1), c_end.shape[0] - 1)
    y1 = np.einsum("ij,ij->i", alloc, c1[interval])
    y2 = np.einsum("ij,ij->i", alloc, c2[interval])
    y3 = p_loss + np.einsum("ij,ij->i", alloc, c3[interval])
    u = inertia / f0 + y1
    lhs = u * y2
    scale = np.maximum(np.maximum(np.abs(lhs), y3 * y3 / (4.0 * delta_f_max)), 1e-300)
    # MW allowance on |y3|, matching the steady-state tolerance
    y3 = np.maximum(np.abs(y3) - rtol * max(p_loss, 1.0), 0.0)
    rhs = y3 * y3 / (4.0 * delta_f_max)
    nadir_ok = ss_ok & (u >= -rtol * abs(inertia / f0)) & (lhs - rhs >= -rtol * scale)
    return ss_ok, nadir_ok, interval
