import numpy as np
from numba import njit


@njit(cache=True)
def _rhs(t, y, h, f0, p_loss, damping, kind, r, tr, d, gain, tau, db, out):
    df = y[0]
    total = 0.0
    for j in range(kind.size):
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


@njit(cache=True)
def _simulate(h, f0, p_loss, damping, dt, n_steps, kind, r, tr, d, gain, tau, db, rk4):
    m = kind.size
    n = m + 1
    t = np.arange(n_steps + 1) * dt
    df = np.zeros(n_steps + 1)
    fr = np.zeros((n_steps + 1, m))
    y = np.zeros(n)
    k1 = np.zeros(n)
    k2 = np.zeros(n)
    k3 = np.zeros(n)
    k4 = np.zeros(n)
    tmp = np.zeros(n)
    for i in range(n_steps + 1):
        ti = t[i]
        for j in range(m):
            if kind[j] == 0:
                v = r[j] * (ti - d[j]) / tr[j]
            else:
                v = y[1 + j]
            fr[i, j] = min(max(v, 0.0), r[j])
        df[i] = y[0]
        if i == n_steps:
            break
        _rhs(ti, y, h, f0, p_loss, damping, kind, r, tr, d, gain, tau, db, k1)
        if rk4:
            for q in range(n):
                tmp[q] = y[q] + 0.5 * dt * k1[q]
            _rhs(ti + 0.5 * dt, tmp, h, f0, p_loss, damping, kind, r, tr, d, gain, tau, db, k2)
            for q in range(n):
                tmp[q] = y[q] + 0.5 * dt * k2[q]
            _rhs(ti + 0.5 * dt, tmp, h, f0, p_loss, damping, kind, r, tr, d, gain, tau, db, k3)
            for q in range(n):
                tmp[q] = y[q] + dt * k3[q]
            _rhs(ti + dt, tmp, h, f0, p_loss, damping, kind, r, tr, d, gain, tau, db, k4)
            for q in range(n):
                y[q] += dt / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q])
        else:
            for q in range(n):
                y[q] += dt * k1[q]
    return t, df, fr


def simulate_swing(h, f0, p_loss, damping, dt, n_steps, kind, r, tr, d, gain, tau, db, rk4=True):
    f = lambda a: np.ascontiguousarray(a, dtype=np.float64)
    return _simulate(float(h), float(f0), float(p_loss), float(damping), float(dt), int(n_steps),
                     np.ascontiguousarray(kind, dtype=np.int64), f(r), f(tr), f(d), f(gain), f(tau), f(db),
                     bool(rk4))


@njit(cache=True)
def _batch(alloc, c_end, c1, c2, c3, p_loss, inertia, f0, delta_f_max, rtol, ss_ok, nadir_ok, interval):
    npts, ns = alloc.shape
    nint = c_end.shape[0]
    tol = 1e-9 * max(p_loss, 1.0)
    for i in range(npts):
        total = 0.0
        for s in range(ns):
            total += alloc[i, s]
        ss = total >= p_loss - rtol * max(p_loss, 1.0)
        ss_ok[i] = ss
        sel = nint - 1
        for n in range(nint):
            fr = 0.0
            for s in range(ns):
                fr += c_end[n, s] * alloc[i, s]
            if fr >= p_loss - tol:
                sel = n
                break
        interval[i] = sel
        y1 = 0.0
        y2 = 0.0
        y3 = p_loss
        for s in range(ns):
            y1 += c1[sel, s] * alloc[i, s]
            y2 += c2[sel, s] * alloc[i, s]
            y3 += c3[sel, s] * alloc[i, s]
        u = inertia / f0 + y1
        lhs = u * y2
        scale = max(max(abs(lhs), y3 * y3 / (4.0 * delta_f_max)), 1e-300)
        y3 = max(abs(y3) - rtol * max(p_loss, 1.0), 0.0)
        rhs = y3 * y3 / (4.0 * delta_f_max)
        nadir_ok[i] = ss and u >= -rtol * abs(inertia / f0) and lhs - rhs >= -rtol * scale


def batch_security(alloc, c_end, c1, c2, c3, p_loss, inertia, f0, delta_f_max, rtol):
    alloc = np.ascontiguousarray(np.atleast_2d(alloc), dtype=np.float64)
    npts = alloc.shape[0]
    ss_ok = np.zeros(npts, dtype=np.bool_)
    nadir_ok = np.zeros(npts, dtype=np.bool_)
    interval = np.zeros(npts, dtype=np.int64)
    f = lambda a: np.ascontiguousarray(a, dtype=np.float64)
    _batch(alloc, f(c_end), f(c1), f(c2), f(c3), float(p_loss), float(inertia), float(f0),
           float(delta_f_max), float(rtol), ss_ok, nadir_ok, interval)
    return ss_ok, nadir_ok, interval
