"""Closed-form post-fault frequency: FR(t), deviation, nadir and initial RoCoF.

Each service injects nothing until its activation delay, ramps with slope
``R/T`` and holds ``R`` from ``delay + T`` on. Between consecutive breakpoints
(activation and completion instants) the aggregate FR is affine, so the
frequency deviation is a quadratic in t on every interval.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (EmptyPortfolio, Portfolio, SecuritySpec, SteadyStateInfeasible, SystemSnapshot,
                   ZeroInertia)

CROSSING_RTOL = 1e-9


@dataclass(frozen=True)
class Interval:
    start: float
    end: float
    delivered: tuple[int, ...]  # K: fully delivered at interval start
    ramping: tuple[int, ...]  # L: ramping throughout the interval
    slope: float  # sum over L of R/T, MW/s
    offset: float  # FR(t) = offset + slope * t inside the interval

    def fr(self, t):
        return self.offset + self.slope * t


@dataclass(frozen=True)
class IntervalDecomposition:
    breakpoints: tuple[float, ...]
    intervals: tuple[Interval, ...]

    def __len__(self):
        return len(self.intervals)

    def index_of(self, t: float) -> int:
        """Interval containing ``t``; intervals are (start, end], t=0 maps to the first."""
        i = int(np.searchsorted(self.breakpoints, t, side="left"))
        return min(i, len(self.intervals) - 1)


def breakpoints(services) -> np.ndarray:
    times = [s.activation_delay for s in services if s.activation_delay > 0]
    times += [s.completion_time for s in services]
    return np.unique(np.asarray(times, dtype=float))


def interval_sets(services, bps) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """(K, L) index sets per interval; depends only on delays and ramp durations."""
    out = []
    start = 0.0
    for end in bps:
        k = tuple(i for i, s in enumerate(services) if s.completion_time <= start)
        l = tuple(i for i, s in enumerate(services)
                  if s.activation_delay <= start and s.completion_time >= end)
        out.append((k, l))
        start = end
    return out


def decompose(portfolio: Portfolio) -> IntervalDecomposition:
    if len(portfolio) == 0:
        raise EmptyPortfolio("portfolio has no services")
    services = portfolio.services
    r, t, d = portfolio.arrays()
    bps = breakpoints(services)
    intervals = []
    start = 0.0
    for end, (k, l) in zip(bps, interval_sets(services, bps)):
        slope = float(sum(r[j] / t[j] for j in l))
        offset = float(sum(r[j] for j in k) - sum(r[j] * d[j] / t[j] for j in l))
        intervals.append(Interval(float(start), float(end), k, l, slope, offset))
        start = end
    return IntervalDecomposition(tuple(float(b) for b in bps), tuple(intervals))


def fr_total(t, portfolio: Portfolio):
    """Aggregate FR injection at time(s) ``t``; zero for t <= 0."""
    r, tr, d = portfolio.arrays()
    tt = np.asarray(t, dtype=float)
    frac = np.clip((tt[..., None] - d) / tr, 0.0, 1.0)
    out = frac @ r
    return float(out) if np.ndim(t) == 0 else out


def fr_energy(t, portfolio: Portfolio):
    """Integral of FR from 0 to ``t`` (MW*s)."""
    r, tr, d = portfolio.arrays()
    tt = np.asarray(t, dtype=float)[..., None]
    tau = np.clip(tt - d, 0.0, None)
    ramping = r * np.minimum(tau, tr) ** 2 / (2 * tr)
    held = r * np.clip(tau - tr, 0.0, None)
    out = (ramping + held).sum(axis=-1)
    return float(out) if np.ndim(t) == 0 else out


def _inertia(snapshot: SystemSnapshot) -> float:
    h = snapshot.h_gen + snapshot.h_demand
    if h <= 0:
        raise ZeroInertia("H + H_D must be positive")
    return h


def delta_f(t, snapshot: SystemSnapshot, spec: SecuritySpec):
    """Frequency deviation (Hz, negative for a drop) with damping neglected."""
    h = _inertia(snapshot)
    tt = np.clip(np.asarray(t, dtype=float), 0.0, None)
    val = spec.f_nominal / (2 * h) * (fr_energy(tt, snapshot.portfolio) - snapshot.p_loss * tt)
    return float(val) if np.ndim(t) == 0 else val


def rocof_initial(snapshot: SystemSnapshot, spec: SecuritySpec) -> float:
    h = _inertia(snapshot)
    return snapshot.p_loss * spec.f_nominal / (2 * h)


def nadir_interval_index(dec: IntervalDecomposition, p_loss: float) -> int:
    """First interval whose end already meets the lost infeed."""
    tol = CROSSING_RTOL * max(p_loss, 1.0)
    for i, iv in enumerate(dec.intervals):
        if iv.fr(iv.end) >= p_loss - tol:
            return i
    raise SteadyStateInfeasible(
        f"total FR {dec.intervals[-1].fr(dec.intervals[-1].end):.6g} MW below lost infeed {p_loss:.6g} MW")


def nadir_time(portfolio: Portfolio, p_loss: float) -> tuple[float, int]:
    """Earliest t with FR(t) >= P_L and the interval containing it."""
    dec = decompose(portfolio)
    if p_loss <= 0:
        return 0.0, 0
    n = nadir_interval_index(dec, p_loss)
    iv = dec.intervals[n]
    if iv.fr(iv.start) >= p_loss or iv.slope <= 0:
        return iv.start, n
    t = (p_loss - iv.offset) / iv.slope
    return float(min(max(t, iv.start), iv.end)), n


def nadir(snapshot: SystemSnapshot, spec: SecuritySpec) -> tuple[float, float, int]:
    """(t_nadir, |deviation| at the nadir, interval index)."""
    _inertia(snapshot)
    t, n = nadir_time(snapshot.portfolio, snapshot.p_loss)
    return t, abs(delta_f(t, snapshot, spec)), n
