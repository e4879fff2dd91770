"""Desk-scale frequency-secured unit commitment over a few periods.

Units of a class are identical, so most classes are committed as an integer
count with a shared dispatch. Classes flagged ``individual`` (the large
nuclear units) get one commitment binary and output per unit so the largest
infeed can follow each unit's output.
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import security
from .conic import (ConicProgram, Infeasible, SolveResult, add_frequency_constraints, solve_by_enumeration,
                    solve_mi)
from .core import (ChanceSpec, FreqSecError, FrService, InvalidInput, Portfolio, SecuritySpec, SystemSnapshot,
                   chance_from_dict, chance_to_dict, service_from_dict, service_to_dict, spec_from_dict,
                   spec_to_dict, validate_portfolio)


class DispatchInfeasible(Infeasible):
    pass


@dataclass(frozen=True)
class GenUnit:
    label: str
    count: int
    rated_power: float
    min_stable: float
    no_load_cost: float = 0.0  # per h
    marginal_cost: float = 0.0  # per MWh
    startup_cost: float = 0.0
    inertia_constant: float = 0.0  # s
    max_fr: float = 0.0  # MW per unit
    fr_service: str | None = None
    min_up: int = 1  # periods
    min_down: int = 1
    must_run: bool = False
    individual: bool = False
    # None: output in [min_stable, rated]; otherwise in [rated - max_part_load, rated]
    max_part_load: float | None = None

    def __post_init__(self):
        if self.count < 0 or int(self.count) != self.count:
            raise InvalidInput(f"unit {self.label!r}: count must be a non-negative integer")
        if not 0 <= self.min_stable <= self.rated_power:
            raise InvalidInput(f"unit {self.label!r}: need 0 <= min_stable <= rated_power")
        for name in ("no_load_cost", "marginal_cost", "startup_cost", "inertia_constant", "max_fr"):
            if getattr(self, name) < 0:
                raise InvalidInput(f"unit {self.label!r}: {name} must be >= 0")

    @property
    def min_output(self) -> float:
        if self.max_part_load is None:
            return self.min_stable
        return max(self.min_stable, self.rated_power - self.max_part_load)

    @property
    def inertia_per_unit(self) -> float:
        """MW*s contributed by one online unit."""
        return self.inertia_constant * self.rated_power


def thermal_fleet(pfr_share: float = 1.0, fast_service: str | None = None, part_load: float | None = None
                 ) -> list[GenUnit]:
    """Nuclear, CCGT and OCGT classes with the thermal fleet parameters used in the examples.

    ``pfr_share`` of the CCGTs offer "PFR"; the rest offer ``fast_service``.
    """
    nuclear = GenUnit("Nuclear", 4, 1800, 1400, 0, 10, 0, 5, 0, None, must_run=True, individual=True,
                      max_part_load=0.0 if part_load is None else part_load)
    n_pfr = int(round(100 * pfr_share))
    ccgt = dict(rated_power=500, min_stable=250, no_load_cost=4500, marginal_cost=47, startup_cost=10000,
                inertia_constant=4, max_fr=50, min_up=4, min_down=1)
    units = [nuclear, GenUnit("CCGT", n_pfr, fr_service="PFR", **ccgt)]
    if n_pfr < 100:
        units.append(GenUnit(f"CCGT-{fast_service}", 100 - n_pfr, fr_service=fast_service, **ccgt))
    units.append(GenUnit("OCGT", 30, 100, 50, 3000, 200, 0, 4, 20, "PFR"))
    return units


@dataclass(frozen=True)
class DispatchCase:
    units: tuple[GenUnit, ...]
    demand: tuple[float, ...]  # MW per period
    wind: tuple[float, ...]  # available MW per period
    spec: SecuritySpec = SecuritySpec()
    fr_catalog: tuple[FrService, ...] = ()
    standalone_fr: dict = field(default_factory=dict)  # service id -> MW not backed by units (batteries)
    chance: ChanceSpec | None = None
    h_demand: float = 0.0  # deterministic demand inertia, MW*s, used when chance is None
    initial_online: dict | None = None  # label -> units online before period 0
    secure: bool = True

    def __post_init__(self):
        object.__setattr__(self, "units", tuple(self.units))
        object.__setattr__(self, "demand", tuple(float(d) for d in self.demand))
        wind = tuple(float(w) for w in self.wind) if self.wind else (0.0,) * len(self.demand)
        object.__setattr__(self, "wind", wind)
        object.__setattr__(self, "fr_catalog", tuple(self.fr_catalog))
        if not 1 <= len(self.demand) <= 48:
            raise InvalidInput("periods must be between 1 and 48")
        if len(wind) != len(self.demand):
            raise InvalidInput("wind needs one value per period")
        if any(d <= 0 for d in self.demand):
            raise InvalidInput("demand must be positive")
        if any(w < 0 for w in wind):
            raise InvalidInput("wind must be >= 0")
        labels = [u.label for u in self.units]
        if len(set(labels)) != len(labels):
            raise InvalidInput("unit labels must be unique")
        ids = {s.id for s in self.fr_catalog}
        for u in self.units:
            if u.fr_service is not None and u.fr_service not in ids:
                raise InvalidInput(f"unit {u.label!r} offers unknown service {u.fr_service!r}")
        for sid in self.standalone_fr:
            if sid not in ids:
                raise InvalidInput(f"standalone capacity for unknown service {sid!r}")

    @property
    def periods(self) -> int:
        return len(self.demand)

    def service_capacity(self, sid: str) -> float:
        """Upper bound on R for a service: unit headroom plus standalone capacity, capped by the catalog."""
        svc = next(s for s in self.fr_catalog if s.id == sid)
        units = sum(u.count * u.max_fr for u in self.units if u.fr_service == sid)
        return min(svc.capacity_max, units + float(self.standalone_fr.get(sid, 0.0)))

    def active_services(self) -> list[FrService]:
        """Catalog services that can carry a nonzero allocation, by completion time."""
        svcs = [s for s in self.fr_catalog if self.service_capacity(s.id) > 0]
        return list(validate_portfolio(Portfolio(svcs)).services)


@dataclass
class Schedule:
    commitment: dict  # label -> per-period online count
    dispatch: dict  # label -> per-period MW (class total)
    unit_output: dict  # label -> per-period list of per-unit MW (individual classes)
    wind_used: list
    curtailment: list
    fr: dict  # service id -> per-period MW
    inertia: list  # H from committed units, MW*s
    p_loss: list  # largest single infeed, MW
    cost: float
    reports: list  # SecurityReport per period (empty when unsecured)
    status: str = ""
    duality_gap: float = 0.0
    node_count: int = 0
    active_interval: list = field(default_factory=list)

    @property
    def secure(self) -> bool:
        return all(r.secure for r in self.reports)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "cost": self.cost,
            "duality_gap": self.duality_gap,
            "node_count": self.node_count,
            "commitment": self.commitment,
            "dispatch": self.dispatch,
            "unit_output": self.unit_output,
            "wind_used": self.wind_used,
            "curtailment": self.curtailment,
            "fr": self.fr,
            "inertia": self.inertia,
            "p_loss": self.p_loss,
            "active_interval": self.active_interval,
            "security": [r.to_dict() for r in self.reports],
        }


# ------------------------------------------------------------------ model

@dataclass
class _Handles:
    n: dict = field(default_factory=dict)  # (label, t) -> var, or (label, i, t) for individual units
    p: dict = field(default_factory=dict)
    r: dict = field(default_factory=dict)
    wind: dict = field(default_factory=dict)
    h: dict = field(default_factory=dict)
    p_loss: dict = field(default_factory=dict)
    fr: dict = field(default_factory=dict)  # (sid, t)
    services: list = field(default_factory=list)


def build_dispatch_program(case: DispatchCase) -> tuple[ConicProgram, _Handles]:
    prog = ConicProgram()
    hd = _Handles()
    spec = case.spec
    services = case.active_services()
    hd.services = services
    periods = range(case.periods)
    init = case.initial_online

    for t in periods:
        bal = {}
        h_row = {}
        pl = prog.add_var(f"P_L[{t}]", 0.0, spec.p_loss_max)
        hd.p_loss[t] = pl
        h_max = sum(u.count * u.inertia_per_unit for u in case.units)
        h = prog.add_var(f"H[{t}]", 0.0, h_max)
        hd.h[t] = h
        fr_sources = {s.id: {} for s in services}
        for u in case.units:
            if u.count == 0:
                continue
            offers = u.fr_service in fr_sources and u.max_fr > 0
            blocks = [(i, 1) for i in range(u.count)] if u.individual else [(None, u.count)]
            for i, size in blocks:
                key = (u.label, t) if i is None else (u.label, i, t)
                tag = f"{u.label}[{t}]" if i is None else f"{u.label}#{i}[{t}]"
                lo = size if u.must_run else 0
                on = prog.add_var(f"on:{tag}", lo, size, "B" if size == 1 else "I")
                p = prog.add_var(f"p:{tag}", 0.0, size * u.rated_power)
                hd.n[key], hd.p[key] = on, p
                prog.add_row({p: 1.0, on: -u.rated_power}, "<=", 0.0, f"max_out:{tag}")
                prog.add_row({p: -1.0, on: u.min_output}, "<=", 0.0, f"min_out:{tag}")
                prog.add_cost(on, u.no_load_cost)
                prog.add_cost(p, u.marginal_cost)
                bal[p] = 1.0
                h_row[on] = -u.inertia_per_unit
                if offers:
                    r = prog.add_var(f"r:{tag}", 0.0, size * u.max_fr)
                    hd.r[key] = r
                    prog.add_row({r: 1.0, on: -u.max_fr}, "<=", 0.0, f"fr_cap:{tag}")
                    prog.add_row({r: 1.0, p: 1.0, on: -u.rated_power}, "<=", 0.0, f"headroom:{tag}")
                    fr_sources[u.fr_service][r] = -1.0
                if i is not None:
                    prog.add_row({p: 1.0, pl: -1.0}, "<=", 0.0, f"largest_loss:{tag}")
                else:
                    # any unit of the class online can trip at up to rated output
                    y = prog.add_var(f"any:{tag}", 0.0, 1.0, "B")
                    prog.add_row({on: 1.0, y: -float(size)}, "<=", 0.0, f"any_online:{tag}")
                    prog.add_row({y: u.rated_power, pl: -1.0}, "<=", 0.0, f"largest_loss:{tag}")
                _startup_rows(prog, case, u, i, size, t, on, hd, init)
        w = prog.add_var(f"wind[{t}]", 0.0, case.wind[t])
        hd.wind[t] = w
        bal[w] = 1.0
        prog.add_row(bal, "=", case.demand[t], f"balance[{t}]")
        h_row[h] = 1.0
        prog.add_row(h_row, "=", 0.0, f"inertia[{t}]")
        r_vars = []
        for s in services:
            rv = prog.add_var(f"R:{s.id}[{t}]", 0.0, case.service_capacity(s.id))
            prog.add_cost(rv, s.headroom_cost)
            hd.fr[(s.id, t)] = rv
            r_vars.append(rv)
            row = dict(fr_sources[s.id])
            row[rv] = 1.0
            prog.add_row(row, "<=", float(case.standalone_fr.get(s.id, 0.0)), f"fr_backing:{s.id}[{t}]")
        if case.secure:
            if not services:
                raise DispatchInfeasible("frequency security needs at least one FR service with capacity")
            add_frequency_constraints(prog, services, spec, h, pl, r_vars, chance=case.chance,
                                      h_demand=case.h_demand, tag=f"[{t}]")
    return prog, hd


def _startup_rows(prog, case, u, i, size, t, on, hd, init):
    """Startup cost and minimum up/down time for one commitment variable."""
    if u.must_run:
        return
    key = (u.label, t) if i is None else (u.label, i, t)
    tag = f"{u.label}[{t}]" if i is None else f"{u.label}#{i}[{t}]"
    if t == 0:
        if init is None or u.label not in init:
            return  # free initial state
        before = float(init[u.label]) if i is None else float(i < init[u.label])
        prev = None
    else:
        prev = hd.n[(u.label, t - 1) if i is None else (u.label, i, t - 1)]
        before = 0.0
    kind = "B" if size == 1 else "I"
    su = prog.add_var(f"su:{tag}", 0.0, size, kind)
    hd.n[("su",) + key] = su
    row = {on: 1.0, su: -1.0}
    if prev is not None:
        row[prev] = -1.0
    prog.add_row(row, "<=", before, f"startup:{tag}")
    prog.add_cost(su, u.startup_cost)
    if case.periods == 1:
        return
    sd = prog.add_var(f"sd:{tag}", 0.0, size, kind)
    hd.n[("sd",) + key] = sd
    row = {on: -1.0, sd: -1.0}
    if prev is not None:
        row[prev] = 1.0
    prog.add_row(row, "<=", -before, f"shutdown:{tag}")
    sub = (u.label,) if i is None else (u.label, i)
    if u.min_up > 1:
        window = [hd.n.get(("su",) + sub + (tt,)) for tt in range(max(0, t - u.min_up + 1), t + 1)]
        row = {v: 1.0 for v in window if v is not None}
        row[on] = row.get(on, 0.0) - 1.0
        prog.add_row(row, "<=", 0.0, f"min_up:{tag}")
    if u.min_down > 1:
        window = [hd.n.get(("sd",) + sub + (tt,)) for tt in range(max(0, t - u.min_down + 1), t + 1)]
        row = {v: 1.0 for v in window if v is not None}
        row[on] = row.get(on, 0.0) + 1.0
        prog.add_row(row, "<=", float(size), f"min_down:{tag}")


# ------------------------------------------------------------------ solve

def _diagnose(case: DispatchCase, gap: float) -> str:
    cap = [sum(u.count * u.rated_power for u in case.units) + w for w in case.wind]
    for t, (d, c) in enumerate(zip(case.demand, cap)):
        if d > c + 1e-9:
            return f"power balance in period {t}: demand {d:g} MW exceeds capacity {c:g} MW"
    must = [sum(u.count * u.min_output for u in case.units if u.must_run)]
    for t, d in enumerate(case.demand):
        if must[0] > d + 1e-9:
            return f"power balance in period {t}: must-run output {must[0]:g} MW exceeds demand {d:g} MW"
    if case.secure:
        try:
            solve_mi(build_dispatch_program(replace(case, secure=False))[0], gap)
        except Infeasible:
            return "unit limits or min up/down times cannot meet demand"
        return "frequency security (RoCoF, steady-state or nadir) cannot be met by the available fleet"
    return "unit limits or min up/down times cannot meet demand"


def solve_dispatch(case: DispatchCase, gap: float = 0.005, method: str = "mi") -> Schedule:
    """Least-cost commitment and dispatch meeting demand and frequency security every period."""
    if not 0 < gap <= 0.5:
        raise InvalidInput("gap must lie in (0, 0.5]")
    prog, hd = build_dispatch_program(case)
    try:
        if method == "mi":
            res = solve_mi(prog, gap)
        elif method == "enum":
            res = solve_by_enumeration(prog, gap)
        else:
            raise InvalidInput(f"unknown method {method!r}")
    except Infeasible:
        raise DispatchInfeasible(_diagnose(case, gap)) from None
    return _schedule(case, prog, hd, res)


def _schedule(case: DispatchCase, prog: ConicProgram, hd: _Handles, res: SolveResult) -> Schedule:
    x = res.x
    T = case.periods
    commitment, dispatch, unit_output = {}, {}, {}
    for u in case.units:
        if u.count == 0:
            commitment[u.label] = [0] * T
            dispatch[u.label] = [0.0] * T
            continue
        if u.individual:
            ons = [[int(round(x[hd.n[(u.label, i, t)]])) for i in range(u.count)] for t in range(T)]
            outs = [[float(x[hd.p[(u.label, i, t)]]) * on for i, on in enumerate(row)]
                    for t, row in enumerate(ons)]
            commitment[u.label] = [sum(row) for row in ons]
            dispatch[u.label] = [sum(row) for row in outs]
            unit_output[u.label] = outs
        else:
            commitment[u.label] = [int(round(x[hd.n[(u.label, t)]])) for t in range(T)]
            dispatch[u.label] = [float(x[hd.p[(u.label, t)]]) if commitment[u.label][t] else 0.0
                                 for t in range(T)]
    wind_used = [float(x[hd.wind[t]]) for t in range(T)]
    curtail = [max(case.wind[t] - wind_used[t], 0.0) for t in range(T)]
    fr = {s.id: [max(float(x[hd.fr[(s.id, t)]]), 0.0) for t in range(T)] for s in hd.services}
    inertia = [sum(commitment[u.label][t] * u.inertia_per_unit for u in case.units) for t in range(T)]
    # largest infeed: the biggest individual unit output or the equal share of an aggregated class
    p_loss = []
    for t in range(T):
        largest = 0.0
        for u in case.units:
            if u.individual and u.label in unit_output:
                largest = max([largest] + unit_output[u.label][t])
            elif commitment[u.label][t] > 0:
                largest = max(largest, dispatch[u.label][t] / commitment[u.label][t])
        p_loss.append(largest)
    reports = []
    if case.secure:
        for t in range(T):
            alloc = [min(fr[s.id][t], s.capacity_max) for s in hd.services]
            snap = SystemSnapshot(inertia[t], case.h_demand if case.chance is None else 0.0, p_loss[t],
                                  Portfolio(hd.services, alloc))
            rep = security.assess(snap, case.spec, case.chance, rtol=1e-6)
            if not rep.secure:
                raise FreqSecError(f"period {t}: returned schedule fails independent assessment "
                                   f"({', '.join(rep.violations())})")
            reports.append(rep)
    return Schedule(commitment, dispatch, unit_output, wind_used, curtail, fr, inertia, p_loss,
                    float(res.objective), reports, res.status.value, float(res.duality_gap), res.node_count,
                    res.active_interval if isinstance(res.active_interval, list) else [res.active_interval])


def frequency_service_cost(case: DispatchCase, gap: float = 0.005) -> float:
    """Secured minus unsecured cost."""
    return solve_dispatch(case, gap).cost - solve_dispatch(replace(case, secure=False), gap).cost


# ------------------------------------------------------------------ sweeps

# axis -> expected direction of cost as the value grows (+1 non-decreasing, -1 non-increasing)
AXIS_DIRECTION = {"delay": 1, "fraction": -1, "sigma": 1, "h_mu": -1, "wind": -1}


def _axis(axis: str) -> tuple[str, str | None]:
    name, _, arg = axis.partition(":")
    if name not in AXIS_DIRECTION:
        raise InvalidInput(f"unknown sweep axis {axis!r}; expected one of {sorted(AXIS_DIRECTION)}")
    if name in ("delay", "fraction") and not arg:
        raise InvalidInput(f"axis {name!r} needs a service id, e.g. {name}:FR2")
    return name, arg or None


def case_at(case: DispatchCase, axis: str, value: float) -> DispatchCase:
    name, sid = _axis(axis)
    if name == "delay":
        cat = [replace(s, activation_delay=float(value)) if s.id == sid else s for s in case.fr_catalog]
        if not any(s.id == sid for s in case.fr_catalog):
            raise InvalidInput(f"no service {sid!r} in the catalog")
        return replace(case, fr_catalog=tuple(cat))
    if name == "fraction":
        return replace(case, units=tuple(_split_fraction(case.units, sid, float(value))))
    if name == "sigma":
        if case.chance is None:
            raise InvalidInput("sigma axis needs a chance block in the case")
        return replace(case, chance=replace(case.chance, sigma=float(value)))
    if name == "h_mu":
        if case.chance is None:
            return replace(case, h_demand=float(value))
        return replace(case, chance=replace(case.chance, h_mu=float(value)))
    return replace(case, wind=tuple(float(value) * w for w in case.wind))


def _split_fraction(units: Sequence[GenUnit], sid: str, frac: float) -> list[GenUnit]:
    """Move a fraction of a unit family to the class offering ``sid``.

    A family is the offering class plus the class sharing its parameters
    under another service (e.g. "CCGT" and "CCGT-FR2").
    """
    if not 0 <= frac <= 1:
        raise InvalidInput("fraction must lie in [0, 1]")
    target = [u for u in units if u.fr_service == sid and not u.individual]
    if len(target) != 1:
        raise InvalidInput(f"fraction axis needs exactly one aggregated class offering {sid!r}")
    tgt = target[0]

    def same_kind(u):
        return (u is not tgt and not u.individual and u.rated_power == tgt.rated_power
                and u.min_stable == tgt.min_stable and u.marginal_cost == tgt.marginal_cost
                and u.no_load_cost == tgt.no_load_cost and u.inertia_constant == tgt.inertia_constant)

    partners = [u for u in units if same_kind(u)]
    if len(partners) != 1:
        raise InvalidInput(f"fraction axis needs one partner class sharing {tgt.label!r}'s parameters")
    other = partners[0]
    total = tgt.count + other.count
    k = int(round(frac * total))
    out = []
    for u in units:
        if u is tgt:
            out.append(replace(u, count=k))
        elif u is other:
            out.append(replace(u, count=total - k))
        else:
            out.append(u)
    return out


@dataclass
class SweepRow:
    value: float
    cost: float
    curtailment: float
    min_soc_slack_ratio: float
    min_rocof_margin: float
    status: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def monotone_flags(costs: Sequence[float], direction: int, rtol: float) -> list[bool]:
    """Per step, whether cost moved in the expected direction (ties within ``rtol`` allowed)."""
    flags = []
    for a, b in zip(costs, costs[1:]):
        tol = rtol * max(abs(a), abs(b), 1.0)
        flags.append(b >= a - tol if direction > 0 else b <= a + tol)
    return flags


def threads() -> int:
    try:
        return max(1, int(os.environ.get("FREQSEC_THREADS", "1")))
    except ValueError:
        return 1


def sweep(case: DispatchCase, axis: str, values: Sequence[float], gap: float = 0.005
          ) -> tuple[list[SweepRow], list[bool]]:
    """Re-solve the case per value; returns rows and monotonicity flags for the axis."""
    name, _ = _axis(axis)
    cases = [case_at(case, axis, v) for v in values]

    def run(c):
        try:
            s = solve_dispatch(c, gap)
        except DispatchInfeasible:
            return None
        return s

    n_workers = min(threads(), len(cases)) or 1
    if n_workers > 1:
        with ThreadPoolExecutor(n_workers) as pool:
            schedules = list(pool.map(run, cases))
    else:
        schedules = [run(c) for c in cases]
    rows = []
    for v, s in zip(values, schedules):
        if s is None:
            rows.append(SweepRow(float(v), math.inf, math.nan, math.nan, math.nan, "Infeasible"))
            continue
        rows.append(SweepRow(float(v), s.cost, float(sum(s.curtailment)),
                             min((r.soc_slack_ratio for r in s.reports), default=math.nan),
                             min((r.rocof_margin for r in s.reports), default=math.nan), s.status))
    flags = monotone_flags([r.cost for r in rows], AXIS_DIRECTION[name], gap)
    return rows, flags


# ------------------------------------------------------------------ case.json

def unit_from_dict(d: dict) -> GenUnit:
    try:
        return GenUnit(
            label=str(d["label"]), count=int(d["count"]), rated_power=float(d["rated_power"]),
            min_stable=float(d["min_stable"]), no_load_cost=float(d.get("no_load_cost", 0.0)),
            marginal_cost=float(d.get("marginal_cost", 0.0)), startup_cost=float(d.get("startup_cost", 0.0)),
            inertia_constant=float(d.get("inertia_constant", 0.0)), max_fr=float(d.get("max_fr", 0.0)),
            fr_service=d.get("fr_service"), min_up=int(d.get("min_up", 1)), min_down=int(d.get("min_down", 1)),
            must_run=bool(d.get("must_run", False)), individual=bool(d.get("individual", False)),
            max_part_load=None if d.get("max_part_load") is None else float(d["max_part_load"]),
        )
    except KeyError as exc:
        raise InvalidInput(f"missing field units[].{exc.args[0]}") from None


def unit_to_dict(u: GenUnit) -> dict:
    return dict(u.__dict__)


def case_from_dict(doc: dict) -> DispatchCase:
    if not isinstance(doc, dict):
        raise InvalidInput("case document must be a JSON object")
    try:
        units = [unit_from_dict(u) for u in doc["units"]]
        demand = doc["demand"]
        catalog = [service_from_dict(s, f"fr_catalog[{i}]")[0] for i, s in enumerate(doc["fr_catalog"])]
    except KeyError as exc:
        raise InvalidInput(f"missing field {exc.args[0]}") from None
    demand = [demand] if isinstance(demand, (int, float)) else demand
    wind = doc.get("wind", [0.0] * len(demand))
    wind = [wind] if isinstance(wind, (int, float)) else wind
    spec = spec_from_dict(doc["spec"]) if "spec" in doc else SecuritySpec()
    chance = chance_from_dict(doc["chance"]) if doc.get("chance") is not None else None
    return DispatchCase(units, demand, wind, spec, catalog, dict(doc.get("standalone_fr", {})), chance,
                        float(doc.get("h_demand", 0.0)), doc.get("initial_online"), bool(doc.get("secure", True)))


def case_to_dict(case: DispatchCase) -> dict:
    doc = {
        "spec": spec_to_dict(case.spec),
        "demand": list(case.demand),
        "wind": list(case.wind),
        "units": [unit_to_dict(u) for u in case.units],
        "fr_catalog": [service_to_dict(s) for s in case.fr_catalog],
        "standalone_fr": dict(case.standalone_fr),
        "h_demand": case.h_demand,
        "secure": case.secure,
    }
    if case.chance is not None:
        doc["chance"] = chance_to_dict(case.chance)
    if case.initial_online is not None:
        doc["initial_online"] = dict(case.initial_online)
    return doc


def load_case(path) -> DispatchCase:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path}: {exc}") from None
    return case_from_dict(doc)
