"""Frequency-security constraint set as a mixed-integer rotated-SOC program."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .. import dynamics, security
from ..core import ChanceSpec, FrService, Portfolio, SecuritySpec, SystemSnapshot, validate_portfolio
from .program import ConicProgram, SolveResult, UnboundedBigM, affine


@dataclass(frozen=True)
class ProgramCosts:
    inertia: float = 0.0  # per MW*s
    p_loss: float = 0.0  # per MW of largest loss (negative to reward a larger infeed)


@dataclass(frozen=True)
class FrequencyHandles:
    """Variable indices of one period's frequency block inside a program."""

    h: int
    p_loss: int
    r: tuple[int, ...]
    services: tuple[FrService, ...]
    selectors: tuple[int, ...]
    intervals: tuple[int, ...]  # decomposition index of each selector


def candidate_intervals(services: Sequence[FrService]) -> list[tuple[int, float, float, tuple, tuple]]:
    """(index, start, end, K, L) for every interval with at least one ramping service.

    Intervals where nothing ramps are left out: FR is flat there, so a crossing
    can only sit on their left edge, which the preceding interval already covers.
    """
    bps = dynamics.breakpoints(services)
    out = []
    start = 0.0
    for n, (end, (k, l)) in enumerate(zip(bps, dynamics.interval_sets(services, bps))):
        if l:
            out.append((n, float(start), float(end), k, l))
        start = end
    return out


def demand_inertia(chance: ChanceSpec | None, h_demand: float, p: str) -> float:
    if chance is None:
        return h_demand
    return security.chance_adjusted_inertia(0.0, chance, getattr(chance, p))


def add_frequency_constraints(prog: ConicProgram, services: Sequence[FrService], spec: SecuritySpec,
                              h: int, p_loss: int, r: Sequence[int], *, chance: ChanceSpec | None = None,
                              h_demand: float = 0.0, tag: str = "") -> FrequencyHandles:
    """RoCoF, steady-state and gated nadir cones over existing H, P_L and R variables.

    ``services`` must be ordered by completion time, matching ``r``.
    """
    f0 = spec.f_nominal
    hd_rocof = demand_inertia(chance, h_demand, "eta")
    hd_nadir = demand_inertia(chance, h_demand, "alpha")
    # H + H_D >= P_L f0 / (2 RoCoF_max)
    prog.add_row({h: -1.0, p_loss: f0 / (2 * spec.rocof_max)}, "<=", hd_rocof, f"rocof{tag}")
    coefs = {p_loss: 1.0}
    for j in r:
        coefs[j] = coefs.get(j, 0.0) - 1.0
    prog.add_row(coefs, "<=", 0.0, f"steady_state{tag}")

    cands = candidate_intervals(services)
    selectors, idx = [], []
    w_scale = 1.0 / (2.0 * math.sqrt(spec.delta_f_max))
    for n, start, end, k, l in cands:
        z = prog.add_var(f"z{tag}[{n}]", 0.0, 1.0, "B")
        selectors.append(z)
        idx.append(n)
        c_in = security.fr_coefficients(services, start)
        entry = {p_loss: -1.0}
        for j, a in zip(r, c_in):
            if a:
                entry[j] = entry.get(j, 0.0) + a
        prog.add_gated_row(entry, 0.0, z, f"nadir_entry{tag}[{n}]")
        c_out = security.fr_coefficients(services, end)
        exit_ = {p_loss: 1.0}
        for j, a in zip(r, c_out):
            if a:
                exit_[j] = exit_.get(j, 0.0) - a
        prog.add_gated_row(exit_, 0.0, z, f"nadir_exit{tag}[{n}]")
        c1, c2, c3 = security.soc_coefficients(services, k, l, spec.delta_f_max)
        u = {h: 1.0 / f0}
        for j, a in zip(r, c1):
            if a:
                u[j] = u.get(j, 0.0) + a
        v = {j: a for j, a in zip(r, c2) if a}
        w = {p_loss: w_scale}
        for j, a in zip(r, c3):
            if a:
                w[j] = w.get(j, 0.0) + a * w_scale
        prog.add_gated_rsoc(affine(u, hd_nadir / f0), affine(v), affine(w), z, f"nadir_soc{tag}[{n}]")
        prog.selector_interval[z] = n
    prog.add_row({z: 1.0 for z in selectors}, "=", 1.0, f"one_interval{tag}")
    if len(selectors) == 1:
        prog.variables[selectors[0]].lb = 1.0
    prog.selector_groups.append(selectors)
    return FrequencyHandles(h, p_loss, tuple(r), tuple(services), tuple(selectors), tuple(idx))


def build_program(services: Sequence[FrService], spec: SecuritySpec, chance: ChanceSpec | None = None,
                  inertia_bounds: tuple[float, float] | None = None, costs: ProgramCosts = ProgramCosts(),
                  *, h_demand: float = 0.0, p_loss_bounds: tuple[float, float] | None = None) -> ConicProgram:
    """Single-snapshot program over (H, P_L, R_s) minimizing headroom, inertia and loss costs."""
    if not services:
        raise ValueError("at least one service is required")
    if inertia_bounds is None or not all(math.isfinite(b) for b in inertia_bounds):
        raise UnboundedBigM("inertia bounds must be finite")
    services = validate_portfolio(Portfolio(services)).services
    prog = ConicProgram()
    h = prog.add_var("H", inertia_bounds[0], inertia_bounds[1])
    pl_lo, pl_hi = p_loss_bounds if p_loss_bounds is not None else (0.0, spec.p_loss_max)
    p_loss = prog.add_var("P_L", pl_lo, min(pl_hi, spec.p_loss_max))
    r = [prog.add_var(f"R[{s.id}]", 0.0, s.capacity_max) for s in services]
    for j, s in zip(r, services):
        prog.add_cost(j, s.headroom_cost)
    prog.add_cost(h, costs.inertia)
    prog.add_cost(p_loss, costs.p_loss)
    handles = add_frequency_constraints(prog, services, spec, h, p_loss, r, chance=chance, h_demand=h_demand)
    prog.meta["frequency"] = [handles]
    prog.meta["spec"] = spec
    prog.meta["chance"] = chance
    prog.meta["h_demand"] = h_demand
    return prog


def snapshot_from_solution(handles: FrequencyHandles, x, h_demand: float = 0.0) -> SystemSnapshot:
    alloc = [max(float(x[j]), 0.0) for j in handles.r]
    alloc = [min(a, s.capacity_max) for a, s in zip(alloc, handles.services)]
    return SystemSnapshot(max(float(x[handles.h]), 0.0), h_demand, max(float(x[handles.p_loss]), 0.0),
                          Portfolio(handles.services, alloc))


def check_solution(prog: ConicProgram, result: SolveResult, rtol: float = 1e-6):
    """Independent security assessment of every frequency block at the returned point."""
    spec = prog.meta["spec"]
    chance = prog.meta.get("chance")
    reports = []
    for handles in prog.meta["frequency"]:
        snap = snapshot_from_solution(handles, result.x, 0.0 if chance else prog.meta.get("h_demand", 0.0))
        reports.append(security.assess(snap, spec, chance, rtol=rtol))
    return reports
