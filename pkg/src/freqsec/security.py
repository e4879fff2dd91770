"""Frequency-security margins, deterministic and chance-constrained."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dynamics
from .core import (ChanceSpec, Portfolio, ProbabilityOutOfRange, SecurityReport, SecuritySpec,
                   SteadyStateInfeasible, SystemSnapshot)

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class NadirSocTerms:
    """Terms of the nadir cone ``(H/f0 + y1) * y2 >= y3_sq`` for one interval."""

    y1: float
    y2: float
    y3_sq: float
    y3_num: float  # P_L - sum_K R + sum_L R*delay/T, so y3_sq = y3_num**2 / (4 dfmax)

    def lhs(self, inertia: float, f0: float) -> float:
        return (inertia / f0 + self.y1) * self.y2

    def holds(self, inertia: float, f0: float, rtol: float = 0.0, p_loss: float = 0.0) -> bool:
        """Cone test; ``rtol`` is relative on the cone and, as MW of FR, on ``|y3_num|``.

        The MW allowance matches the steady-state tolerance and keeps the test
        well posed when the FR total lands on P_L and both sides vanish.
        """
        u = inertia / f0 + self.y1
        scale = max(abs(u * self.y2), self.y3_sq, 1e-300)
        rhs = self.y3_sq
        if self.y3_num != 0:
            rhs *= (max(abs(self.y3_num) - rtol * max(p_loss, 1.0), 0.0) / abs(self.y3_num)) ** 2
        return u >= -rtol * abs(inertia / f0) and u * self.y2 - rhs >= -rtol * scale


# ------------------------------------------------------------ linear pieces

def rocof_requirement(p_loss: float, spec: SecuritySpec) -> float:
    """Inertia (MW*s) needed to keep the initial RoCoF at its limit."""
    return p_loss * spec.f_nominal / (2 * spec.rocof_max)


def check_rocof(snapshot: SystemSnapshot, spec: SecuritySpec) -> float:
    return snapshot.h_gen + snapshot.h_demand - rocof_requirement(snapshot.p_loss, spec)


def check_steady_state(portfolio: Portfolio, p_loss: float) -> float:
    return portfolio.total - p_loss


def fr_coefficients(services, t: float) -> np.ndarray:
    """Coefficients c with FR(t) = c @ R."""
    tr = np.array([s.ramp_duration for s in services])
    d = np.array([s.activation_delay for s in services])
    return np.clip((t - d) / tr, 0.0, 1.0)


def soc_coefficients(services, delivered, ramping, delta_f_max: float):
    """Linear maps R -> y1, R -> y2, R -> (y3_num - P_L) for an interval's (K, L)."""
    n = len(services)
    c1, c2, c3 = np.zeros(n), np.zeros(n), np.zeros(n)
    q = 4.0 * delta_f_max
    for k in delivered:
        s = services[k]
        c1[k] = -(s.ramp_duration + 2 * s.activation_delay) / q
        c3[k] = -1.0
    for j in ramping:
        s = services[j]
        c1[j] = s.activation_delay ** 2 / s.ramp_duration / q
        c2[j] = 1.0 / s.ramp_duration
        c3[j] = s.activation_delay / s.ramp_duration
    return c1, c2, c3


# ------------------------------------------------------------------ nadir

def nadir_interval_conditions(portfolio: Portfolio, p_loss: float) -> int:
    """Index of the interval where FR first meets ``p_loss``.

    Entry: FR(start) <= P_L. Exit: FR(end) >= P_L. A crossing exactly on a
    breakpoint belongs to the interval ending there.
    """
    if check_steady_state(portfolio, p_loss) < -dynamics.CROSSING_RTOL * max(p_loss, 1.0):
        raise SteadyStateInfeasible(f"sum R = {portfolio.total:.6g} MW < P_L = {p_loss:.6g} MW")
    dec = dynamics.decompose(portfolio)
    tol = dynamics.CROSSING_RTOL * max(p_loss, 1.0)
    for n, iv in enumerate(dec.intervals):
        if iv.fr(iv.start) <= p_loss + tol and iv.fr(iv.end) >= p_loss - tol:
            return n
    return len(dec) - 1  # only reachable inside the tolerance band


def nadir_soc_terms(portfolio: Portfolio, p_loss: float, spec: SecuritySpec, interval: int) -> NadirSocTerms:
    dec = dynamics.decompose(portfolio)
    iv = dec.intervals[interval]
    r = np.array(portfolio.allocations)
    c1, c2, c3 = soc_coefficients(portfolio.services, iv.delivered, iv.ramping, spec.delta_f_max)
    y3_num = p_loss + float(c3 @ r)
    return NadirSocTerms(float(c1 @ r), float(c2 @ r), y3_num ** 2 / (4 * spec.delta_f_max), y3_num)


def zero_delay_terms(portfolio: Portfolio, p_loss: float, spec: SecuritySpec, interval: int) -> tuple[float, float, float]:
    """Zero-delay nadir terms (x1 - H/f0, x2, rhs) written directly from delivery times.

    Kept separate from :func:`nadir_soc_terms` as a reference for the all-zero
    delay case.
    """
    ts = sorted({s.ramp_duration for s in portfolio.services})
    prev = ts[interval - 1] if interval > 0 else 0.0
    q = 4 * spec.delta_f_max
    x1 = x2 = done = 0.0
    for s, r in zip(portfolio.services, portfolio.allocations):
        if s.ramp_duration <= prev:
            x1 -= r * s.ramp_duration / q
            done += r
        else:
            x2 += r / s.ramp_duration
    return x1, x2, (p_loss - done) ** 2 / q


# ------------------------------------------------------------------ chance

def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / _SQRT2)


# rational approximation coefficients (P. J. Acklam), refined by Halley steps
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00, 3.754408661907416e+00)
_P_LOW = 0.02425


def normal_inv_cdf(p: float) -> float:
    """Standard normal quantile, |Phi(x) - p| well below 1e-12 on (0, 1)."""
    if not 0.0 < p < 1.0:
        raise ProbabilityOutOfRange(f"probability must lie in (0, 1), got {p}")
    if p < _P_LOW:
        q = math.sqrt(-2 * math.log(p))
        x = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1)
    elif p <= 1 - _P_LOW:
        q = p - 0.5
        r = q * q
        x = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
            (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1)
    else:
        q = math.sqrt(-2 * math.log1p(-p))
        x = -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1)
    # Halley refinement; the upper tail works on the complement to keep precision
    for _ in range(2):
        if x > 0:
            e = -(0.5 * math.erfc(x / _SQRT2) - (1.0 - p))
        else:
            e = normal_cdf(x) - p
        u = e * _SQRT2PI * math.exp(x * x / 2)
        x = x - u / (1 + x * u / 2)
    return x


def chance_adjusted_inertia(h_gen: float, chance: ChanceSpec, p: float) -> float:
    """Deterministic inertia that makes the chance constraint at confidence ``p`` exact."""
    return h_gen + chance.h_mu - normal_inv_cdf(p) * chance.sigma


# ------------------------------------------------------------------ report

def effective_inertia(snapshot: SystemSnapshot, chance: ChanceSpec | None) -> tuple[float, float]:
    """(inertia for RoCoF, inertia for nadir)."""
    if chance is None:
        h = snapshot.h_gen + snapshot.h_demand
        return h, h
    return (chance_adjusted_inertia(snapshot.h_gen, chance, chance.eta),
            chance_adjusted_inertia(snapshot.h_gen, chance, chance.alpha))


def assess(snapshot: SystemSnapshot, spec: SecuritySpec, chance: ChanceSpec | None = None,
           rtol: float = 1e-9) -> SecurityReport:
    h_rocof, h_nadir = effective_inertia(snapshot, chance)
    p_loss = snapshot.p_loss
    f0 = spec.f_nominal

    rocof_margin = h_rocof - rocof_requirement(p_loss, spec)
    rocof_value = p_loss * f0 / (2 * h_rocof) if h_rocof > 0 else (0.0 if p_loss == 0 else math.inf)
    rocof_ok = rocof_margin >= -rtol * max(abs(h_rocof), 1.0)

    ss_margin = check_steady_state(snapshot.portfolio, p_loss)
    ss_ok = ss_margin >= -rtol * max(p_loss, 1.0)

    n_int = len(dynamics.breakpoints(snapshot.portfolio.services))
    if not ss_ok:
        return SecurityReport(rocof_value, rocof_ok, ss_margin, False, math.inf, math.inf, n_int - 1,
                              False, -math.inf, rocof_margin, math.inf)

    n = nadir_interval_conditions(snapshot.portfolio, p_loss)
    terms = nadir_soc_terms(snapshot.portfolio, p_loss, spec, n)
    slack = terms.lhs(h_nadir, f0) - terms.y3_sq
    nadir_ok = terms.holds(h_nadir, f0, rtol, p_loss)
    t_nadir, _ = dynamics.nadir_time(snapshot.portfolio, p_loss)
    if h_nadir > 0:
        eff = SystemSnapshot(h_nadir, 0.0, p_loss, snapshot.portfolio)
        depth = abs(dynamics.delta_f(t_nadir, eff, spec))
    else:
        depth = 0.0 if p_loss == 0 else math.inf
    return SecurityReport(rocof_value, rocof_ok, ss_margin, True, t_nadir, depth, n, nadir_ok, slack,
                          rocof_margin, terms.y3_sq)


def batch_tables(services, delta_f_max: float):
    """Per-interval coefficient tables used by :func:`assess_batch`."""
    bps = dynamics.breakpoints(services)
    c_end = np.array([fr_coefficients(services, b) for b in bps])
    tabs = [soc_coefficients(services, k, l, delta_f_max) for k, l in dynamics.interval_sets(services, bps)]
    c1, c2, c3 = (np.array([t[i] for t in tabs]) for i in range(3))
    return c_end, c1, c2, c3


def assess_batch(alloc, services, h_gen: float, p_loss: float, spec: SecuritySpec,
                 chance: ChanceSpec | None = None, h_demand: float = 0.0, rtol: float = 1e-9):
    """Vectorised :func:`assess` over rows of ``alloc`` (services sorted by completion time).

    Returns a boolean array: True where RoCoF, steady-state and nadir all hold.
    """
    from .kernels import batch_security

    snap = SystemSnapshot(h_gen, h_demand if chance is None else 0.0, p_loss, Portfolio(services))
    h_rocof, h_nadir = effective_inertia(snap, chance)
    rocof_ok = h_rocof - rocof_requirement(p_loss, spec) >= -rtol * max(abs(h_rocof), 1.0)
    c_end, c1, c2, c3 = batch_tables(services, spec.delta_f_max)
    ss_ok, nadir_ok, _ = batch_security(np.asarray(alloc, dtype=float), c_end, c1, c2, c3, p_loss, h_nadir,
                                        spec.f_nominal, spec.delta_f_max, rtol)
    return rocof_ok & ss_ok & nadir_ok
