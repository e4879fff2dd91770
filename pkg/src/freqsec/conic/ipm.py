"""Dense primal-dual interior-point solver for small second-order cone programs.

Solves::

    minimize    c'x
    subject to  G x + s = h,  A x = b,  s in K

with K a product of a nonnegative orthant of size ``dims['l']`` and
second-order cones of sizes ``dims['q']`` (``s0 >= ||s[1:]||``). The iteration
runs on the homogeneous self-dual embedding with Nesterov-Todd scaling and a
Mehrotra predictor-corrector, so infeasibility shows up as a certificate
instead of a stalled iteration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla


class NumericalFailure(RuntimeError):
    def __init__(self, msg, trace=None):
        super().__init__(msg)
        self.trace = trace or []


@dataclass
class IpmResult:
    status: str  # optimal | infeasible | unbounded | failure
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    s: np.ndarray
    pcost: float
    dcost: float
    gap: float
    relgap: float
    pres: float
    dres: float
    iterations: int
    trace: list = field(default_factory=list)


# ------------------------------------------------------------------ cone algebra

class _Cone:
    def __init__(self, dims):
        self.l = int(dims.get("l", 0))
        self.q = [int(k) for k in dims.get("q", [])]
        self.m = self.l + sum(self.q)
        self.degree = self.l + len(self.q)
        self.blocks = []
        off = self.l
        for k in self.q:
            self.blocks.append(slice(off, off + k))
            off += k

    def identity(self):
        e = np.zeros(self.m)
        e[:self.l] = 1.0
        for sl in self.blocks:
            e[sl.start] = 1.0
        return e

    def min_eig(self, x):
        """Smallest 'eigenvalue'; x is interior iff this is > 0."""
        vals = [np.min(x[:self.l])] if self.l else []
        for sl in self.blocks:
            v = x[sl]
            vals.append(v[0] - np.linalg.norm(v[1:]))
        return min(vals) if vals else 1.0

    def prod(self, u, v):
        out = np.empty(self.m)
        out[:self.l] = u[:self.l] * v[:self.l]
        for sl in self.blocks:
            a, b = u[sl], v[sl]
            out[sl.start] = a @ b
            out[sl.start + 1:sl.stop] = a[0] * b[1:] + b[0] * a[1:]
        return out

    def div(self, lam, d):
        """Solve lam o u = d for u."""
        out = np.empty(self.m)
        out[:self.l] = d[:self.l] / lam[:self.l]
        for sl in self.blocks:
            l0, l1 = lam[sl.start], lam[sl.start + 1:sl.stop]
            d0, d1 = d[sl.start], d[sl.start + 1:sl.stop]
            det = l0 * l0 - l1 @ l1
            u0 = (l0 * d0 - l1 @ d1) / det
            out[sl.start] = u0
            out[sl.start + 1:sl.stop] = (d1 - u0 * l1) / l0
        return out

    def nt_scaling(self, s, z):
        """Symmetric W with W z = W^{-1} s = lambda; returns (W, W^{-1}, lambda)."""
        W = np.zeros((self.m, self.m))
        Wi = np.zeros((self.m, self.m))
        if self.l:
            w = np.sqrt(s[:self.l] / z[:self.l])
            idx = np.arange(self.l)
            W[idx, idx] = w
            Wi[idx, idx] = 1.0 / w
        for sl in self.blocks:
            sb, zb = s[sl], z[sl]
            sn = math.sqrt(max(sb[0] ** 2 - sb[1:] @ sb[1:], 1e-300))
            zn = math.sqrt(max(zb[0] ** 2 - zb[1:] @ zb[1:], 1e-300))
            sbar, zbar = sb / sn, zb / zn
            gamma = math.sqrt(max((1.0 + sbar @ zbar) / 2.0, 1e-300))
            wbar = sbar.copy()
            wbar[0] += zbar[0]
            wbar[1:] -= zbar[1:]
            wbar /= 2.0 * gamma
            eta = math.sqrt(sn / zn)
            w0, w1 = wbar[0], wbar[1:]
            k = sb.size
            blk = np.empty((k, k))
            blk[0, 0] = w0
            blk[0, 1:] = w1
            blk[1:, 0] = w1
            blk[1:, 1:] = np.eye(k - 1) + np.outer(w1, w1) / (1.0 + w0)
            W[sl, sl] = eta * blk
            iblk = blk.copy()
            iblk[0, 1:] = -w1
            iblk[1:, 0] = -w1
            Wi[sl, sl] = iblk / eta
        return W, Wi, W @ z

    def max_step(self, x, dx):
        """Largest alpha with x + alpha*dx in the cone, for x interior."""
        alpha = math.inf
        if self.l:
            neg = dx[:self.l] < 0
            if np.any(neg):
                alpha = float(np.min(-x[:self.l][neg] / dx[:self.l][neg]))
        for sl in self.blocks:
            x0, x1 = x[sl.start], x[sl.start + 1:sl.stop]
            d0, d1 = dx[sl.start], dx[sl.start + 1:sl.stop]
            a = d0 * d0 - d1 @ d1
            b = 2.0 * (x0 * d0 - x1 @ d1)
            c = x0 * x0 - x1 @ x1
            alpha = min(alpha, _first_root(a, b, c, x0, d0))
        return alpha


def _first_root(a, b, c, x0, d0):
    c = max(c, 0.0)
    scale = max(abs(a), abs(b), abs(c), 1e-300)
    if abs(a) <= 1e-14 * scale:
        r = -c / b if b < 0 else math.inf
    else:
        disc = b * b - 4 * a * c
        if disc < 0:
            r = math.inf
        else:
            sq = math.sqrt(disc)
            q = -0.5 * (b + math.copysign(sq, b))
            roots = [q / a]
            if q != 0:
                roots.append(c / q)
            pos = [t for t in roots if t > 0]
            r = min(pos) if pos else math.inf
    if d0 < 0:
        r = min(r, -x0 / d0)
    return r


# ------------------------------------------------------------------ solver

def solve_socp(c, G, h, dims, A=None, b=None, *, feastol=1e-8, abstol=1e-9, reltol=1e-9,
               max_iter=200, verbose=False) -> IpmResult:
    c = np.asarray(c, dtype=float)
    G = np.atleast_2d(np.asarray(G, dtype=float))
    h = np.asarray(h, dtype=float)
    n = c.size
    if A is None or np.size(A) == 0:
        A = np.zeros((0, n))
        b = np.zeros(0)
    A = np.atleast_2d(np.asarray(A, dtype=float)).reshape(-1, n)
    b = np.asarray(b, dtype=float).reshape(-1)
    p = A.shape[0]
    cone = _Cone(dims)
    m = cone.m
    if G.shape != (m, n):
        raise ValueError(f"G has shape {G.shape}, expected {(m, n)}")
    e = cone.identity()
    N = n + p + m

    def kkt(Wsq, reg):
        K = np.zeros((N, N))
        K[:n, n:n + p] = A.T
        K[:n, n + p:] = G.T
        K[n:n + p, :n] = A
        K[n + p:, :n] = G
        K[n + p:, n + p:] = -Wsq
        Kreg = K.copy()
        Kreg[np.arange(n), np.arange(n)] += reg
        Kreg[n + np.arange(p), n + np.arange(p)] -= reg
        Kreg[n + p + np.arange(m), n + p + np.arange(m)] -= reg
        return K, sla.lu_factor(Kreg, check_finite=False)

    def ksolve(K, lu, rhs):
        sol = sla.lu_solve(lu, rhs, check_finite=False)
        for _ in range(3):
            res = rhs - K @ sol
            if np.linalg.norm(res, np.inf) <= 1e-14 * max(1.0, np.linalg.norm(rhs, np.inf)):
                break
            sol = sol + sla.lu_solve(lu, res, check_finite=False)
        return sol

    normc = max(1.0, np.linalg.norm(c))
    normb = max(1.0, np.linalg.norm(b)) if p else 1.0
    normh = max(1.0, np.linalg.norm(h))
    reg0 = 1e-10

    # initial point: least-norm primal and dual solutions shifted into the cone
    K0, lu0 = kkt(np.eye(m), reg0)
    sol = ksolve(K0, lu0, np.concatenate([np.zeros(n), b, h]))
    x = sol[:n]
    s = -sol[n + p:]
    sol = ksolve(K0, lu0, np.concatenate([-c, np.zeros(p), np.zeros(m)]))
    y = sol[n:n + p]
    z = sol[n + p:]
    for vec in (s, z):
        a = cone.min_eig(vec)
        if a <= 0:
            vec += (1.0 - a) * e
    tau = kappa = 1.0
    trace = []

    status = "failure"
    it = 0
    best = None
    for it in range(max_iter + 1):
        rx = A.T @ y + G.T @ z + c * tau
        ry = A @ x - b * tau
        rz = s + G @ x - h * tau
        cx, by, hz = c @ x, b @ y, h @ z
        rt = kappa + cx + by + hz
        mu = (s @ z + tau * kappa) / (cone.degree + 1)

        pcost = cx / tau
        dcost = -(hz + by) / tau
        pres = max(np.linalg.norm(ry) / normb if p else 0.0, np.linalg.norm(rz) / normh) / tau
        dres = np.linalg.norm(rx) / normc / tau
        gap = s @ z / tau ** 2
        if pcost < 0:
            relgap = gap / -pcost
        elif dcost > 0:
            relgap = gap / dcost
        else:
            relgap = math.inf
        # infeasibility measures
        pinf = np.linalg.norm(A.T @ y + G.T @ z) / max(-(hz + by), 1e-300) if hz + by < 0 else math.inf
        dinf = (max(np.linalg.norm(A @ x) if p else 0.0, np.linalg.norm(G @ x + s)) / max(-cx, 1e-300)
                if cx < 0 else math.inf)
        trace.append({"iter": it, "pcost": pcost, "dcost": dcost, "gap": gap, "pres": pres, "dres": dres,
                      "tau": tau, "kappa": kappa})
        if verbose:
            print(f"{it:3d} {pcost:+.8e} {dcost:+.8e} gap={gap:.2e} pres={pres:.2e} dres={dres:.2e} "
                  f"k/t={kappa / tau:.2e}")
        if pres < feastol and dres < feastol and (gap < abstol or relgap < reltol):
            status = "optimal"
            break
        if pinf < feastol and hz + by < 0 and tau < kappa * 1e-2:
            status = "infeasible"
            break
        if dinf < feastol and cx < 0 and tau < kappa * 1e-2:
            status = "unbounded"
            break
        if pres < 10 * feastol and dres < 10 * feastol and (gap < 10 * abstol or relgap < 10 * reltol):
            best = (x / tau, y / tau, z / tau, s / tau, pcost, dcost, gap, relgap, pres, dres)
        if it == max_iter:
            break

        W, Wi, lam = cone.nt_scaling(s, z)
        if not (np.all(np.isfinite(lam)) and cone.min_eig(lam) > 0):
            break  # iterate sits on the cone boundary; keep the best one seen
        Wsq = W @ W
        try:
            K, lu = kkt(Wsq, reg0)
            q = np.concatenate([c, -b, -h])
            u2 = ksolve(K, lu, q)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NumericalFailure(f"KKT factorization failed: {exc}", trace) from exc
        crow = np.concatenate([c, b, h])

        def direction(ds, dk, resfac):
            r1 = np.concatenate([-resfac * rx, -resfac * ry, -resfac * rz - W @ cone.div(lam, ds)])
            r4 = -resfac * rt - dk / tau
            u1 = ksolve(K, lu, r1)
            dtau = (crow @ u1 - r4) / (crow @ u2 + kappa / tau)
            dxyz = u1 - u2 * dtau
            dx, dy, dz = dxyz[:n], dxyz[n:n + p], dxyz[n + p:]
            ds_ = W @ (cone.div(lam, ds) - W @ dz)
            dkap = (dk - kappa * dtau) / tau
            return dx, dy, dz, ds_, dtau, dkap

        def step_len(dz, ds_, dtau, dkap):
            a = min(cone.max_step(lam, Wi @ ds_), cone.max_step(lam, W @ dz))
            if dtau < 0:
                a = min(a, -tau / dtau)
            if dkap < 0:
                a = min(a, -kappa / dkap)
            return a

        # predictor
        dxa, dya, dza, dsa, dta, dka = direction(-cone.prod(lam, lam), -tau * kappa, 1.0)
        alpha_a = step_len(dza, dsa, dta, dka)
        if math.isnan(alpha_a):
            break  # scaling broke down near the cone boundary; fall back to the best iterate
        alpha_a = min(1.0, alpha_a)
        sigma = min(1.0, max(0.0, 1.0 - alpha_a)) ** 3
        # corrector
        ds = -cone.prod(lam, lam) - cone.prod(Wi @ dsa, W @ dza) + sigma * mu * e
        dk = -tau * kappa - dta * dka + sigma * mu
        dx, dy, dz, ds_, dtau, dkap = direction(ds, dk, 1.0 - sigma)
        alpha = 0.99 * step_len(dz, ds_, dtau, dkap)
        if math.isnan(alpha) or not (np.all(np.isfinite(dx)) and np.all(np.isfinite(dz))):
            break
        alpha = min(1.0, alpha)
        if alpha <= 1e-12:
            break
        x = x + alpha * dx
        y = y + alpha * dy
        z = z + alpha * dz
        s = s + alpha * ds_
        tau = tau + alpha * dtau
        kappa = kappa + alpha * dkap
        trace[-1].update(alpha=alpha, sigma=sigma)

    if status == "infeasible":
        scale = -(h @ z + b @ y)
        return IpmResult(status, x, y / scale, z / scale, s, math.nan, math.nan, math.nan, math.nan,
                         pres, dres, it, trace)
    if status == "unbounded":
        scale = -(c @ x)
        return IpmResult(status, x / scale, y, z, s / scale, -math.inf, -math.inf, math.nan, math.nan,
                         pres, dres, it, trace)
    if status == "optimal":
        return IpmResult(status, x / tau, y / tau, z / tau, s / tau, pcost, dcost, gap, relgap, pres, dres,
                         it, trace)
    if best is not None:
        bx, by_, bz, bs, pc, dc, g, rg, pr, dr = best
        return IpmResult("optimal_inaccurate", bx, by_, bz, bs, pc, dc, g, rg, pr, dr, it, trace)
    return IpmResult("failure", x / tau, y / tau, z / tau, s / tau, pcost, dcost, gap, relgap, pres, dres,
                     it, trace)
