"""``freqsec`` command line.

Exit codes: 0 secure/optimal, 1 insecure or infeasible, 2 bad input.
Machine-readable output goes to stdout (or ``-o``); human summaries go to stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from . import dispatch, dynamics, security, simulate
from .conic import dumps_program
from .core import FreqSecError, InvalidInput, SystemFile, dumps, load_system

EXIT_OK, EXIT_DOMAIN, EXIT_INPUT = 0, 1, 2


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _table(report) -> str:
    rows = [
        ("rocof", f"{report.rocof_value:.6g} Hz/s", f"margin {report.rocof_margin:.6g} MW*s", report.rocof_ok),
        ("steady-state", f"{report.steady_state_margin:.6g} MW", "", report.steady_state_ok),
        ("nadir", f"{report.nadir_depth:.6g} Hz at {report.nadir_time:.6g} s",
         f"interval {report.nadir_interval}, soc slack {report.soc_slack:.6g} ({100 * report.soc_slack_ratio:.3g}%)",
         report.nadir_ok),
    ]
    lines = [f"{name:<13}{'ok' if ok else 'VIOLATED':<10}{val:<28}{extra}" for name, val, extra, ok in rows]
    return "\n".join(lines) + "\n"


def cmd_check(args) -> int:
    system = load_system(args.system)
    rep = security.assess(system.snapshot, system.spec, system.chance)
    _emit(dumps(_jsonable(rep.to_dict())), args.output)
    sys.stderr.write(_table(rep))
    if not rep.secure:
        sys.stderr.write("insecure: " + ", ".join(rep.violations()) + "\n")
    return EXIT_OK if rep.secure else EXIT_DOMAIN


def cmd_nadir(args) -> int:
    system = load_system(args.system)
    snap = system.snapshot
    if snap.portfolio.total < snap.p_loss:
        sys.stderr.write("steady-state violated: frequency never recovers\n")
        return EXIT_DOMAIN
    t, depth, n = dynamics.nadir(snap, system.spec)
    _emit(dumps({"nadir_time": t, "nadir_depth": depth, "nadir_interval": n}), args.output)
    return EXIT_OK


def load_providers(path, system: SystemFile) -> list[simulate.ProviderDynamics]:
    """Provider dynamics from ``providers.json``.

    Either a ``tune`` block (droop providers fitted to the scheduled ramps) or
    a ``providers`` list keyed by service id.
    """
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path}: {exc}") from None
    if not isinstance(doc, dict):
        raise InvalidInput("providers document must be a JSON object")
    snap = system.snapshot
    if "tune" in doc:
        tune = doc["tune"] or {}
        return simulate.tune_droop(snap, system.spec, tau_ratio=float(tune.get("tau_ratio", 1.0 / 3.0)))
    by_id = {s.id: (s, a) for s, a in zip(snap.portfolio.services, snap.portfolio.allocations)}
    out = []
    for i, p in enumerate(doc.get("providers", [])):
        sid = p.get("id")
        if sid not in by_id:
            raise InvalidInput(f"providers[{i}]: unknown service id {sid!r}")
        svc, alloc = by_id[sid]
        kind = p.get("kind", simulate.DELAYED_RAMP)
        if kind == simulate.DROOP_LAG:
            for key in ("gain", "tau"):
                if key not in p:
                    raise InvalidInput(f"providers[{i}]: DroopLag needs {key!r}")
            out.append(simulate.ProviderDynamics(svc, float(p.get("saturation", alloc)), kind, float(p["gain"]),
                                                 float(p["tau"]), float(p.get("deadband", 0.0))))
        else:
            out.append(simulate.ProviderDynamics(svc, alloc, kind))
    if not out:
        raise InvalidInput("providers.json lists no providers")
    return out


def cmd_simulate(args) -> int:
    system = load_system(args.system)
    provs = load_providers(args.providers, system)
    cfg = simulate.SimConfig(dt=args.dt, t_end=args.t_end, damping=args.damping)
    traj = simulate.simulate(system.snapshot, system.spec, provs, cfg)
    _emit(traj.to_csv(stride=args.stride), args.output)
    sys.stderr.write(f"nadir {traj.nadir_depth:.6g} Hz at {traj.nadir_time:.6g} s\n")
    return EXIT_OK if traj.nadir_depth <= system.spec.delta_f_max else EXIT_DOMAIN


def cmd_optimize(args) -> int:
    case = dispatch.load_case(args.case)
    try:
        sched = dispatch.solve_dispatch(case, args.gap, args.method)
    except dispatch.DispatchInfeasible as exc:
        sys.stderr.write(f"infeasible: {exc}\n")
        return EXIT_DOMAIN
    _emit(dumps(_jsonable(sched.to_dict())), args.output)
    sys.stderr.write(f"cost {sched.cost:.10g} ({sched.status}, gap {sched.duality_gap:.3g}, "
                     f"{sched.node_count} nodes)\n")
    return EXIT_OK


def cmd_sweep(args) -> int:
    case = dispatch.load_case(args.case)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise InvalidInput(f"--values must be comma-separated numbers, got {args.values!r}") from None
    if not values:
        raise InvalidInput("--values is empty")
    rows, flags = dispatch.sweep(case, args.axis, values, args.gap)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["value", "cost", "curtailment", "min_soc_slack_ratio", "min_rocof_margin", "status",
                "monotone_with_previous"])
    for i, r in enumerate(rows):
        flag = "" if i == 0 else str(flags[i - 1]).lower()
        w.writerow([repr(r.value), repr(r.cost), repr(r.curtailment), repr(r.min_soc_slack_ratio),
                    repr(r.min_rocof_margin), r.status, flag])
    _emit(buf.getvalue(), args.output)
    ok = all(r.status != "Infeasible" for r in rows)
    return EXIT_OK if ok else EXIT_DOMAIN


def cmd_export(args) -> int:
    case = dispatch.load_case(args.case)
    prog, _ = dispatch.build_dispatch_program(case)
    _emit(dumps_program(prog), args.output)
    return EXIT_OK


def _gap(s: str) -> float:
    g = float(s)
    if not 0 < g <= 0.5:
        raise argparse.ArgumentTypeError("gap must lie in (0, 0.5]")
    return g


def _positive(s: str) -> float:
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="freqsec", description="Frequency-secured scheduling toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="assess RoCoF, steady-state and nadir security of a system file")
    p.add_argument("system")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("nadir", help="time, depth and interval of the frequency nadir")
    p.add_argument("system")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_nadir)

    p = sub.add_parser("optimize", help="solve a frequency-secured dispatch case")
    p.add_argument("case")
    p.add_argument("--gap", type=_gap, default=0.005)
    p.add_argument("--method", choices=("mi", "enum"), default="mi")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("simulate", help="time-domain simulation, trajectory as CSV")
    p.add_argument("system")
    p.add_argument("providers")
    p.add_argument("--dt", type=_positive, default=1e-3)
    p.add_argument("--t-end", type=_positive, default=20.0)
    p.add_argument("--damping", type=float, default=0.0, help="load damping, MW/Hz")
    p.add_argument("--stride", type=int, default=1, help="write every n-th sample")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="re-solve a dispatch case along one parameter axis")
    p.add_argument("case")
    p.add_argument("--axis", required=True, help="delay:<id>, fraction:<id>, sigma, h_mu or wind")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--gap", type=_gap, default=0.005)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export", help="write the dispatch case's conic program in text form")
    p.add_argument("case")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_export)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InvalidInput, OSError, ValueError, KeyError, TypeError) as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_INPUT
    except FreqSecError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
