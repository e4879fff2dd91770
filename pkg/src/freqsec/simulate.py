"""Time-domain swing-equation simulation with per-provider FR dynamics.

Unlike the closed form, the simulation keeps load damping and can model
providers as droop controllers (first-order lag, deadband, saturation) in
place of ideal delayed ramps.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.integrate import trapezoid

from . import dynamics
from .core import FreqSecError, FrService, InvalidInput, Portfolio, SecuritySpec, SystemSnapshot
from .kernels import simulate_swing


class StepTooLarge(InvalidInput):
    pass


class NotConservative(FreqSecError):
    def __init__(self, msg, trajectory=None):
        super().__init__(msg)
        self.trajectory = trajectory


DELAYED_RAMP = "DelayedRamp"
DROOP_LAG = "DroopLag"


@dataclass(frozen=True)
class ProviderDynamics:
    """One FR provider: the ramp envelope it is scheduled for plus how it actually responds.

    ``service``/``allocation`` give the (delay, ramp, R) envelope used by the
    closed form. For DroopLag, ``gain`` is in MW/Hz, ``tau`` in s and
    ``deadband`` in Hz; output saturates at ``allocation``.
    """

    service: FrService
    allocation: float
    kind: str = DELAYED_RAMP
    gain: float = 0.0
    tau: float = 1.0
    deadband: float = 0.0

    def __post_init__(self):
        if self.kind not in (DELAYED_RAMP, DROOP_LAG):
            raise InvalidInput(f"unknown provider kind {self.kind!r}")
        if self.kind == DROOP_LAG and not self.tau > 0:
            raise InvalidInput("DroopLag needs tau > 0")
        if self.allocation < 0:
            raise InvalidInput("saturation must be >= 0")

    @property
    def id(self) -> str:
        return self.service.id


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    t_end: float = 20.0
    damping: float = 0.0  # MW/Hz
    integrator: str = "RK4"

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidInput("dt must be positive")
        if not self.t_end > self.dt:
            raise InvalidInput("t_end must exceed dt")
        if self.integrator not in ("RK4", "Euler"):
            raise InvalidInput(f"unknown integrator {self.integrator!r}")


@dataclass
class Trajectory:
    t: np.ndarray
    delta_f: np.ndarray
    fr: np.ndarray  # (samples, providers)
    ids: list = field(default_factory=list)
    nadir_time: float = math.nan
    nadir_depth: float = math.nan

    @property
    def fr_total(self) -> np.ndarray:
        return self.fr.sum(axis=1)

    def activation_times(self, threshold: float = 1e-9) -> list[float]:
        out = []
        for j in range(self.fr.shape[1]):
            on = np.flatnonzero(self.fr[:, j] > threshold)
            out.append(float(self.t[on[0]]) if on.size else math.inf)
        return out

    def to_csv(self, fh=None, stride: int = 1) -> str | None:
        """Write ``t,delta_f,fr_total,fr_<id>...`` rows plus a nadir summary footer."""
        buf = fh if fh is not None else io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "delta_f", "fr_total"] + [f"fr_{i}" for i in self.ids])
        tot = self.fr_total
        for k in range(0, self.t.size, stride):
            w.writerow([repr(float(self.t[k])), repr(float(self.delta_f[k])), repr(float(tot[k]))]
                       + [repr(float(v)) for v in self.fr[k]])
        buf.write(f"# nadir_time={self.nadir_time!r} nadir_depth={self.nadir_depth!r}\n")
        return buf.getvalue() if fh is None else None


def extract_nadir(t: np.ndarray, df: np.ndarray) -> tuple[float, float]:
    """Minimum of the sampled deviation refined by a 3-point parabola."""
    i = int(np.argmin(df))
    if 0 < i < df.size - 1:
        ym, y0, yp = df[i - 1], df[i], df[i + 1]
        den = ym - 2 * y0 + yp
        if den > 0:
            delta = 0.5 * (ym - yp) / den
            dt = t[i + 1] - t[i]
            return float(t[i] + delta * dt), float(-(y0 - 0.25 * (ym - yp) * delta))
    return float(t[i]), float(-df[i])


def simulate(snapshot: SystemSnapshot, spec: SecuritySpec, providers: Sequence[ProviderDynamics],
             config: SimConfig = SimConfig()) -> Trajectory:
    h = snapshot.h_gen + snapshot.h_demand
    if h <= 0:
        from .core import ZeroInertia
        raise ZeroInertia("H + H_D must be positive")
    taus = [p.tau for p in providers if p.kind == DROOP_LAG]
    if taus and config.dt > min(taus) / 10:
        raise StepTooLarge(f"dt={config.dt} exceeds min(tau)/10={min(taus) / 10}")
    kind = np.array([0 if p.kind == DELAYED_RAMP else 1 for p in providers], dtype=np.int64)
    r = np.array([p.allocation for p in providers], dtype=float)
    tr = np.array([p.service.ramp_duration for p in providers], dtype=float)
    d = np.array([p.service.activation_delay for p in providers], dtype=float)
    gain = np.array([p.gain for p in providers], dtype=float)
    tau = np.array([p.tau for p in providers], dtype=float)
    db = np.array([p.deadband for p in providers], dtype=float)
    n_steps = int(math.ceil(config.t_end / config.dt - 1e-9))
    t, df, fr = simulate_swing(h, spec.f_nominal, snapshot.p_loss, config.damping, config.dt, n_steps,
                               kind, r, tr, d, gain, tau, db, config.integrator == "RK4")
    tn, depth = extract_nadir(t, df)
    return Trajectory(t, df, fr, [p.id for p in providers], tn, depth)


def ramp_providers(portfolio: Portfolio) -> list[ProviderDynamics]:
    return [ProviderDynamics(s, a) for s, a in zip(portfolio.services, portfolio.allocations)]


def envelope_snapshot(snapshot: SystemSnapshot, providers: Sequence[ProviderDynamics]) -> SystemSnapshot:
    """Snapshot whose portfolio is the providers' scheduled ramp envelopes."""
    port = Portfolio([p.service for p in providers], [p.allocation for p in providers])
    return replace(snapshot, portfolio=port)


@dataclass
class ConservativenessReport:
    simulated_depth: float
    closed_form_depth: float
    margin: float
    trajectory: Trajectory


def validate_conservativeness(snapshot: SystemSnapshot, spec: SecuritySpec,
                              providers: Sequence[ProviderDynamics], config: SimConfig = SimConfig(),
                              atol: float = 1e-6) -> ConservativenessReport:
    """Check that the simulated nadir is no deeper than the closed-form one."""
    traj = simulate(snapshot, spec, providers, config)
    _, closed, _ = dynamics.nadir(envelope_snapshot(snapshot, providers), spec)
    if traj.nadir_depth > closed + atol:
        worst = []
        t_env = traj.t
        for j, p in enumerate(providers):
            env = dynamics.fr_total(t_env, Portfolio([p.service], [p.allocation]))
            lag = float(np.max(env - traj.fr[:, j]))
            worst.append(f"{p.id}: max shortfall vs ramp {lag:.4g} MW")
        raise NotConservative(f"simulated nadir {traj.nadir_depth:.6f} Hz deeper than closed form "
                              f"{closed:.6f} Hz; " + "; ".join(worst), traj)
    return ConservativenessReport(traj.nadir_depth, closed, closed - traj.nadir_depth, traj)


# ------------------------------------------------------------------ droop tuning

def tune_droop(snapshot: SystemSnapshot, spec: SecuritySpec, tau_ratio: float = 1.0 / 3.0,
               dt: float = 1e-3) -> list[ProviderDynamics]:
    """Droop-lag providers parameterized against the scheduled ramp envelope.

    The tuning uses the closed-form trajectory (ramps, no damping), which is
    known before the fault. Each provider gets ``tau = tau_ratio * T``
    (``1/3`` settles the lag within the ramp), a deadband equal to the
    envelope deviation at its activation delay, and the gain that makes
    the lag output reach ``R`` exactly at the scheduled completion time.
    """
    port = snapshot.portfolio
    t_end = max([s.completion_time for s in port.services] + [dt])
    t = np.linspace(0.0, t_end, int(math.ceil(t_end / dt)) + 1)
    env = dynamics.delta_f(t, snapshot, spec)
    provs = []
    for s, a in zip(port.services, port.allocations):
        tau = tau_ratio * s.ramp_duration
        db = float(max(-np.interp(s.activation_delay, t, env), 0.0)) if s.activation_delay > 0 else 0.0
        tc = s.completion_time
        m = t <= tc
        # lag output at tc for unit gain: integral e(t') exp(-(tc-t')/tau) dt' / tau
        e = np.maximum(-env[m] - db, 0.0)
        resp = float(trapezoid(e * np.exp(-(tc - t[m]) / tau) / tau, t[m]))
        if a > 0 and not resp > 0:
            raise InvalidInput(f"provider {s.id}: envelope never exceeds its deadband before completion")
        provs.append(ProviderDynamics(s, a, DROOP_LAG, gain=a / resp if a > 0 else 0.0, tau=tau, deadband=db))
    return provs
