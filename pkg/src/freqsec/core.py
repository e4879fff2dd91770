"""Domain types shared by every module, plus the ``system.json`` reader/writer."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np


class FreqSecError(Exception):
    """Base class for all errors raised by the package."""


class InvalidInput(FreqSecError, ValueError):
    pass


class NonPositiveRamp(InvalidInput):
    pass


class NegativeDelay(InvalidInput):
    pass


class AllocationOutOfBounds(InvalidInput):
    pass


class EmptyPortfolio(InvalidInput):
    pass


class ZeroInertia(FreqSecError, ZeroDivisionError):
    pass


class SteadyStateInfeasible(FreqSecError):
    """Total FR is below the lost infeed, so frequency never recovers."""


class ProbabilityOutOfRange(InvalidInput):
    pass


@dataclass(frozen=True)
class FrService:
    id: str
    capacity_max: float
    ramp_duration: float
    activation_delay: float = 0.0
    headroom_cost: float = 0.0

    def __post_init__(self):
        if not self.ramp_duration > 0 or not math.isfinite(self.ramp_duration):
            raise NonPositiveRamp(f"service {self.id!r}: ramp_duration must be > 0, got {self.ramp_duration}")
        if not self.activation_delay >= 0 or not math.isfinite(self.activation_delay):
            raise NegativeDelay(f"service {self.id!r}: activation_delay must be >= 0, got {self.activation_delay}")
        if not self.capacity_max >= 0:
            raise InvalidInput(f"service {self.id!r}: capacity_max must be >= 0")

    @property
    def completion_time(self) -> float:
        return self.activation_delay + self.ramp_duration


@dataclass(frozen=True)
class Portfolio:
    """Services ordered by completion time with the MW allocated to each."""

    services: tuple[FrService, ...]
    allocations: tuple[float, ...]

    def __init__(self, services: Sequence[FrService], allocations: Sequence[float] | None = None):
        services = tuple(services)
        if allocations is None:
            allocations = (0.0,) * len(services)
        allocations = tuple(float(a) for a in allocations)
        if len(allocations) != len(services):
            raise InvalidInput("one allocation per service is required")
        object.__setattr__(self, "services", services)
        object.__setattr__(self, "allocations", allocations)

    def __len__(self):
        return len(self.services)

    @property
    def total(self) -> float:
        return float(sum(self.allocations))

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(allocation, ramp duration, activation delay) as float arrays."""
        r = np.array(self.allocations, dtype=float)
        t = np.array([s.ramp_duration for s in self.services], dtype=float)
        d = np.array([s.activation_delay for s in self.services], dtype=float)
        return r, t, d

    def with_allocations(self, allocations: Sequence[float]) -> "Portfolio":
        return Portfolio(self.services, allocations)


def validate_portfolio(portfolio: Portfolio) -> Portfolio:
    """Check bounds and return the portfolio sorted by completion time.

    The sort is stable, so services sharing a completion time keep their input
    order and the operation is idempotent.
    """
    for s, a in zip(portfolio.services, portfolio.allocations):
        if s.ramp_duration <= 0:
            raise NonPositiveRamp(s.id)
        if s.activation_delay < 0:
            raise NegativeDelay(s.id)
        if not (0.0 <= a <= s.capacity_max):
            raise AllocationOutOfBounds(f"service {s.id!r}: allocation {a} outside [0, {s.capacity_max}]")
    order = sorted(range(len(portfolio)), key=lambda i: portfolio.services[i].completion_time)
    return Portfolio([portfolio.services[i] for i in order], [portfolio.allocations[i] for i in order])


@dataclass(frozen=True)
class SystemSnapshot:
    h_gen: float
    h_demand: float
    p_loss: float
    portfolio: Portfolio

    def __post_init__(self):
        for name in ("h_gen", "h_demand", "p_loss"):
            if not getattr(self, name) >= 0:
                raise InvalidInput(f"{name} must be >= 0")

    @property
    def inertia(self) -> float:
        return self.h_gen + self.h_demand


@dataclass(frozen=True)
class SecuritySpec:
    f_nominal: float = 50.0
    delta_f_max: float = 0.8
    rocof_max: float = 0.5
    p_loss_max: float = 1800.0

    def __post_init__(self):
        for name in ("f_nominal", "delta_f_max", "rocof_max", "p_loss_max"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise InvalidInput(f"{name} must be strictly positive, got {v}")


@dataclass(frozen=True)
class ChanceSpec:
    h_mu: float
    sigma: float
    alpha: float = 0.99
    eta: float = 0.99

    def __post_init__(self):
        if not self.sigma >= 0:
            raise InvalidInput("sigma must be >= 0")
        for name in ("alpha", "eta"):
            p = getattr(self, name)
            if not 0.0 < p < 1.0:
                raise ProbabilityOutOfRange(f"{name} must lie in (0, 1), got {p}")


@dataclass
class SecurityReport:
    rocof_value: float
    rocof_ok: bool
    steady_state_margin: float
    steady_state_ok: bool
    nadir_time: float
    nadir_depth: float
    nadir_interval: int
    nadir_ok: bool
    soc_slack: float
    rocof_margin: float = 0.0
    soc_rhs: float = 0.0

    @property
    def secure(self) -> bool:
        return self.rocof_ok and self.steady_state_ok and self.nadir_ok

    @property
    def soc_slack_ratio(self) -> float:
        if self.soc_rhs == 0:
            return math.inf if self.soc_slack > 0 else 0.0
        return self.soc_slack / self.soc_rhs

    def violations(self) -> list[str]:
        out = []
        if not self.rocof_ok:
            out.append("rocof")
        if not self.steady_state_ok:
            out.append("steady-state")
        if not self.nadir_ok:
            out.append("nadir")
        return out

    def to_dict(self) -> dict[str, Any]:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["secure"] = self.secure
        d["soc_slack_ratio"] = self.soc_slack_ratio
        return d


# ---------------------------------------------------------------- system.json

@dataclass(frozen=True)
class SystemFile:
    spec: SecuritySpec
    snapshot: SystemSnapshot
    chance: ChanceSpec | None = None


def _req(d: dict, key: str, where: str):
    try:
        return d[key]
    except (KeyError, TypeError):
        raise InvalidInput(f"missing field {where}.{key}") from None


def _num(d: dict, key: str, where: str) -> float:
    v = _req(d, key, where)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InvalidInput(f"field {where}.{key} must be a number")
    return float(v)


def service_from_dict(d: dict, where: str = "services[]") -> tuple[FrService, float]:
    svc = FrService(
        id=str(_req(d, "id", where)),
        capacity_max=_num(d, "capacity_max", where),
        ramp_duration=_num(d, "ramp_duration", where),
        activation_delay=float(d.get("activation_delay", 0.0)),
        headroom_cost=float(d.get("headroom_cost", 0.0)),
    )
    return svc, float(d.get("allocation", 0.0))


def service_to_dict(s: FrService, allocation: float | None = None) -> dict:
    d = {"id": s.id, "capacity_max": s.capacity_max, "ramp_duration": s.ramp_duration,
         "activation_delay": s.activation_delay, "headroom_cost": s.headroom_cost}
    if allocation is not None:
        d["allocation"] = allocation
    return d


def spec_from_dict(d: dict) -> SecuritySpec:
    return SecuritySpec(_num(d, "f0", "spec"), _num(d, "delta_f_max", "spec"),
                        _num(d, "rocof_max", "spec"), _num(d, "p_loss_max", "spec"))


def spec_to_dict(s: SecuritySpec) -> dict:
    return {"f0": s.f_nominal, "delta_f_max": s.delta_f_max, "rocof_max": s.rocof_max,
            "p_loss_max": s.p_loss_max}


def chance_from_dict(d: dict) -> ChanceSpec:
    return ChanceSpec(_num(d, "h_mu", "chance"), _num(d, "sigma", "chance"),
                      _num(d, "alpha", "chance"), _num(d, "eta", "chance"))


def chance_to_dict(c: ChanceSpec) -> dict:
    return {"h_mu": c.h_mu, "sigma": c.sigma, "alpha": c.alpha, "eta": c.eta}


def system_from_dict(doc: dict) -> SystemFile:
    if not isinstance(doc, dict):
        raise InvalidInput("system document must be a JSON object")
    spec = spec_from_dict(_req(doc, "spec", "$"))
    snap = _req(doc, "snapshot", "$")
    raw = _req(doc, "services", "$")
    if not isinstance(raw, list):
        raise InvalidInput("services must be a list")
    pairs = [service_from_dict(s, f"services[{i}]") for i, s in enumerate(raw)]
    portfolio = Portfolio([p[0] for p in pairs], [p[1] for p in pairs])
    snapshot = SystemSnapshot(_num(snap, "h_gen", "snapshot"), _num(snap, "h_demand", "snapshot"),
                              _num(snap, "p_loss", "snapshot"), portfolio)
    chance = chance_from_dict(doc["chance"]) if doc.get("chance") is not None else None
    return SystemFile(spec, snapshot, chance)


def system_to_dict(system: SystemFile) -> dict:
    snap = system.snapshot
    doc = {
        "spec": spec_to_dict(system.spec),
        "snapshot": {"h_gen": snap.h_gen, "h_demand": snap.h_demand, "p_loss": snap.p_loss},
        "services": [service_to_dict(s, a) for s, a in zip(snap.portfolio.services, snap.portfolio.allocations)],
    }
    if system.chance is not None:
        doc["chance"] = chance_to_dict(system.chance)
    return doc


def dumps(doc: Any) -> str:
    # json uses repr() for floats: shortest string that round-trips exactly
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def load_system(path: str | Path) -> SystemFile:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidInput(f"{path}: {exc}") from None
    return system_from_dict(doc)


def save_system(system: SystemFile, path: str | Path) -> None:
    Path(path).write_text(dumps(system_to_dict(system)))


def with_snapshot(system: SystemFile, **changes) -> SystemFile:
    return replace(system, snapshot=replace(system.snapshot, **changes))
