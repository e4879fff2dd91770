"""Mixed-integer rotated-SOC program model and its continuous solve."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from ..core import FreqSecError
from .ipm import NumericalFailure, solve_socp


class UnboundedBigM(FreqSecError):
    pass


class Infeasible(FreqSecError):
    def __init__(self, msg, result=None):
        super().__init__(msg)
        self.result = result


class NodeLimit(FreqSecError):
    def __init__(self, msg, result=None):
        super().__init__(msg)
        self.result = result


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    GAP_REACHED = "GapReached"


# an affine expression: ({var index: coefficient}, constant)
Affine = tuple[dict, float]


def affine(coefs: dict | None = None, const: float = 0.0) -> Affine:
    return ({k: float(v) for k, v in (coefs or {}).items() if v != 0.0}, float(const))


@dataclass
class Variable:
    name: str
    lb: float
    ub: float
    kind: str = "C"  # C continuous, B binary, I integer


@dataclass
class Row:
    coefs: dict
    sense: str  # "<=" or "="
    rhs: float
    name: str = ""


@dataclass
class Rsoc:
    """u * v >= w**2 with u, v >= 0."""

    u: Affine
    v: Affine
    w: Affine
    name: str = ""


@dataclass
class BigMLink:
    binary: int
    target: str  # "row" or "rsoc"
    index: int
    big_m: float
    note: str = ""


@dataclass
class ConicProgram:
    variables: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    rsoc_blocks: list = field(default_factory=list)
    links: list = field(default_factory=list)
    objective: dict = field(default_factory=dict)
    objective_const: float = 0.0
    # selector groups (exactly-one binaries) and interval index of each selector
    selector_groups: list = field(default_factory=list)
    selector_interval: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    # ---- construction

    def add_var(self, name: str, lb: float = 0.0, ub: float = math.inf, kind: str = "C") -> int:
        if kind == "B":
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        self.variables.append(Variable(name, float(lb), float(ub), kind))
        return len(self.variables) - 1

    def add_row(self, coefs: dict, sense: str, rhs: float, name: str = "") -> int:
        if sense == ">=":
            coefs, sense, rhs = {k: -v for k, v in coefs.items()}, "<=", -rhs
        if sense not in ("<=", "="):
            raise ValueError(sense)
        self.rows.append(Row({k: float(v) for k, v in coefs.items() if v != 0.0}, sense, float(rhs), name))
        return len(self.rows) - 1

    def add_rsoc(self, u: Affine, v: Affine, w: Affine, name: str = "") -> int:
        self.rsoc_blocks.append(Rsoc(u, v, w, name))
        return len(self.rsoc_blocks) - 1

    def add_cost(self, var: int, coef: float):
        self.objective[var] = self.objective.get(var, 0.0) + float(coef)

    def var_index(self, name: str) -> int:
        for i, v in enumerate(self.variables):
            if v.name == name:
                return i
        raise KeyError(name)

    # ---- bounds of affine expressions over the variable box

    def expr_range(self, coefs: dict, const: float = 0.0) -> tuple[float, float]:
        lo = hi = const
        for j, a in coefs.items():
            v = self.variables[j]
            if a > 0:
                lo += a * v.lb
                hi += a * v.ub
            else:
                lo += a * v.ub
                hi += a * v.lb
        return lo, hi

    def add_gated_row(self, coefs: dict, rhs: float, binary: int, name: str = "") -> int:
        """Row ``coefs @ x <= rhs`` enforced only when ``binary`` is 1."""
        _, hi = self.expr_range(coefs)
        if not math.isfinite(hi):
            raise UnboundedBigM(f"row {name!r}: big-M needs finite bounds on every variable in the row")
        big_m = max(hi - rhs, 0.0)
        gated = dict(coefs)
        gated[binary] = gated.get(binary, 0.0) + big_m
        i = self.add_row(gated, "<=", rhs + big_m, name)
        self.links.append(BigMLink(binary, "row", i, big_m, "max(row) - rhs over bounds"))
        return i

    def add_gated_rsoc(self, u: Affine, v: Affine, w: Affine, binary: int, name: str = "") -> int:
        """Cone enforced when ``binary`` is 1, slack when it is 0."""
        ulo, _ = self.expr_range(*u)
        vlo, _ = self.expr_range(*v)
        wlo, whi = self.expr_range(*w)
        m_w = max(abs(wlo), abs(whi))
        if not all(math.isfinite(t) for t in (ulo, vlo, m_w)):
            raise UnboundedBigM(f"cone {name!r}: big-M needs finite variable bounds")
        m_u = max(-ulo, 0.0) + m_w
        m_v = max(-vlo, 0.0) + m_w
        ug = dict(u[0])
        ug[binary] = ug.get(binary, 0.0) - m_u
        vg = dict(v[0])
        vg[binary] = vg.get(binary, 0.0) - m_v
        i = self.add_rsoc((ug, u[1] + m_u), (vg, v[1] + m_v), w, name)
        self.links.append(BigMLink(binary, "rsoc", i, m_u, "u: max(-u) + max|w| over bounds"))
        self.links.append(BigMLink(binary, "rsoc", i, m_v, "v: max(-v) + max|w| over bounds"))
        return i

    # ---- views

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def integer_indices(self) -> list[int]:
        return [i for i, v in enumerate(self.variables) if v.kind in "BI"]

    @property
    def binaries(self) -> list[int]:
        return [i for i, v in enumerate(self.variables) if v.kind == "B"]

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.array([v.lb for v in self.variables]), np.array([v.ub for v in self.variables]))

    def cost_vector(self) -> np.ndarray:
        c = np.zeros(self.n)
        for j, a in self.objective.items():
            c[j] += a
        return c

    def objective_value(self, x) -> float:
        return float(self.cost_vector() @ x + self.objective_const)

    def violation(self, x, lb=None, ub=None) -> float:
        """Largest relative constraint violation at ``x``."""
        x = np.asarray(x, dtype=float)
        if lb is None:
            lb, ub = self.bounds()
        worst = float(np.max(np.maximum(lb - x, 0) / np.maximum(1, np.abs(lb)), initial=0.0))
        worst = max(worst, float(np.max(np.maximum(x - ub, 0) / np.maximum(1, np.abs(ub)), initial=0.0)))
        for r in self.rows:
            ax = sum(a * x[j] for j, a in r.coefs.items())
            scale = max(1.0, abs(r.rhs), sum(abs(a * x[j]) for j, a in r.coefs.items()))
            err = ax - r.rhs if r.sense == "<=" else abs(ax - r.rhs)
            worst = max(worst, err / scale)
        for cone in self.rsoc_blocks:
            u, v, w = (_eval(e, x) for e in (cone.u, cone.v, cone.w))
            scale = max(1.0, abs(u * v), w * w)
            worst = max(worst, -min(u, 0.0) / max(1.0, abs(u)), -min(v, 0.0) / max(1.0, abs(v)),
                        (w * w - u * v) / scale)
        return worst

    def values(self, x) -> dict:
        return {v.name: float(x[i]) for i, v in enumerate(self.variables)}

    def copy(self) -> "ConicProgram":
        import copy
        return copy.deepcopy(self)


def _eval(e: Affine, x) -> float:
    return sum(a * x[j] for j, a in e[0].items()) + e[1]


# ------------------------------------------------------------------ results

@dataclass
class SolveResult:
    status: Status
    objective: float
    x: np.ndarray
    duality_gap: float
    node_count: int = 1
    active_interval: int | list | None = None
    bound: float = math.nan
    iterations: int = 0
    trace: list = field(default_factory=list)
    names: list = field(default_factory=list)
    nodes: list = field(default_factory=list)  # (node id, parent id, relaxation bound)

    @property
    def ok(self) -> bool:
        return self.status in (Status.OPTIMAL, Status.GAP_REACHED)

    @property
    def primal(self) -> dict:
        return {n: float(v) for n, v in zip(self.names, self.x)}

    def __getitem__(self, name: str) -> float:
        return float(self.x[self.names.index(name)])


def active_interval(program: ConicProgram, x) -> int | list | None:
    if not program.selector_groups:
        return None
    picks = []
    for group in program.selector_groups:
        j = max(group, key=lambda i: x[i])
        picks.append(program.selector_interval.get(j, j))
    return picks[0] if len(picks) == 1 else picks


# ------------------------------------------------------------------ continuous solve

FIX_TOL = 1e-12


def to_socp(program: ConicProgram, lb=None, ub=None):
    """Eliminate fixed variables and build (c, G, h, dims, A, b) for the interior-point solver.

    Returns the data plus the free-variable index list and the fixed values, or
    raises :class:`Infeasible` when a constraint with no free variables fails.
    """
    if lb is None:
        lb, ub = program.bounds()
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    if np.any(lb > ub + 1e-9 * np.maximum(1, np.abs(lb))):
        raise Infeasible("empty variable bounds")
    fixed = np.abs(ub - lb) <= FIX_TOL * np.maximum(1.0, np.abs(lb))
    xfix = np.where(fixed, lb, 0.0)
    free = np.flatnonzero(~fixed)
    pos = {j: k for k, j in enumerate(free)}
    nf = free.size

    def reduce(coefs: dict, const: float = 0.0):
        row = np.zeros(nf)
        for j, a in coefs.items():
            if fixed[j]:
                const += a * xfix[j]
            else:
                row[pos[j]] += a
        return row, const

    # variable scaling keeps MW*s-sized inertia and 0/1 selectors on comparable footing
    dscale = np.ones(nf)
    for k, j in enumerate(free):
        mags = [abs(t) for t in (lb[j], ub[j]) if math.isfinite(t) and t != 0]
        if mags:
            dscale[k] = max(mags)

    g_rows, h_vals, a_rows, b_vals = [], [], [], []

    def push_ineq(row, rhs, name=""):
        # row @ x <= rhs
        nrm = np.max(np.abs(row * dscale))
        if nrm == 0.0:
            if rhs < -1e-9 * max(1.0, abs(rhs)):
                raise Infeasible(f"constant row {name!r} violated")
            return
        g_rows.append(row / nrm)
        h_vals.append(rhs / nrm)

    for k, j in enumerate(free):
        if math.isfinite(ub[j]):
            e = np.zeros(nf)
            e[k] = 1.0
            push_ineq(e, ub[j])
        if math.isfinite(lb[j]):
            e = np.zeros(nf)
            e[k] = -1.0
            push_ineq(e, -lb[j])
    for r in program.rows:
        row, const = reduce(r.coefs)
        rhs = r.rhs - const
        if r.sense == "<=":
            push_ineq(row, rhs, r.name)
        else:
            nrm = np.max(np.abs(row * dscale))
            if nrm == 0.0:
                if abs(rhs) > 1e-9 * max(1.0, abs(r.rhs)):
                    raise Infeasible(f"constant equality {r.name!r} violated")
                continue
            a_rows.append(row / nrm)
            b_vals.append(rhs / nrm)

    cone_rows, cone_h, qdims = [], [], []
    for cone in program.rsoc_blocks:
        (ur, uc), (vr, vc), (wr, wc) = (reduce(*e) for e in (cone.u, cone.v, cone.w))
        uconst, vconst, wconst = not np.any(ur), not np.any(vr), not np.any(wr)
        if wconst and abs(wc) == 0.0:
            push_ineq(-ur, uc, cone.name)
            push_ineq(-vr, vc, cone.name)
            continue
        if (uconst and uc <= 0.0) or (vconst and vc <= 0.0):
            # degenerate: w must vanish and the other factor stay nonnegative
            if uconst and uc < 0.0 or vconst and vc < 0.0:
                raise Infeasible(f"cone {cone.name!r} has a negative constant factor")
            nrm = np.max(np.abs(wr * dscale))
            if nrm == 0.0:
                if abs(wc) > 1e-9:
                    raise Infeasible(f"cone {cone.name!r} violated")
            else:
                a_rows.append(wr / nrm)
                b_vals.append(-wc / nrm)
            push_ineq(-ur, uc, cone.name)
            push_ineq(-vr, vc, cone.name)
            continue
        # (u+v, u-v, 2w) in the standard cone; s = h - G x
        blk = np.vstack([-(ur + vr), -(ur - vr), -2 * wr])
        hb = np.array([uc + vc, uc - vc, 2 * wc])
        nrm = max(np.max(np.abs(blk * dscale)), 1e-300)
        cone_rows.append(blk / nrm)
        cone_h.append(hb / nrm)
        qdims.append(3)

    c_red, c_const = reduce(program.objective)
    nl = len(g_rows)
    G = np.vstack(g_rows + cone_rows) if (g_rows or cone_rows) else np.zeros((0, nf))
    h = np.concatenate([np.array(h_vals)] + cone_h) if (g_rows or cone_rows) else np.zeros(0)
    A = np.vstack(a_rows) if a_rows else np.zeros((0, nf))
    b = np.array(b_vals)
    # x = D * xs
    G = G * dscale
    A = A * dscale
    cs = c_red * dscale
    return dict(c=cs, G=G, h=h, dims={"l": nl, "q": qdims}, A=A, b=b, free=free, xfix=xfix,
                dscale=dscale, c_const=c_const + program.objective_const)


def solve_continuous(program: ConicProgram, lb=None, ub=None, *, reltol=1e-9, raise_on_failure=False
                     ) -> SolveResult:
    """Solve the program with integrality dropped (binaries/integers fixed through bounds)."""
    names = [v.name for v in program.variables]
    if lb is None:
        lb, ub = program.bounds()
    try:
        data = to_socp(program, lb, ub)
    except Infeasible:
        return SolveResult(Status.INFEASIBLE, math.inf, np.full(program.n, np.nan), math.nan, names=names)
    free, xfix, dscale = data["free"], data["xfix"], data["dscale"]
    x = xfix.copy()
    if free.size == 0:
        viol = program.violation(x, lb, ub)
        status = Status.OPTIMAL if viol <= 1e-9 else Status.INFEASIBLE
        obj = program.objective_value(x) if status == Status.OPTIMAL else math.inf
        return SolveResult(status, obj, x, 0.0, active_interval=active_interval(program, x), bound=obj,
                           names=names)
    if data["G"].shape[0] == 0 and data["A"].shape[0] == 0:
        raise NumericalFailure("free variables without constraints")
    try:
        res = solve_socp(data["c"], data["G"], data["h"], data["dims"], data["A"], data["b"],
                         reltol=reltol, abstol=reltol)
    except NumericalFailure:
        if raise_on_failure:
            raise
        return SolveResult(Status.INFEASIBLE, math.inf, np.full(program.n, np.nan), math.nan, names=names)
    if res.status == "infeasible":
        return SolveResult(Status.INFEASIBLE, math.inf, np.full(program.n, np.nan), math.nan,
                           iterations=res.iterations, trace=res.trace, names=names)
    if res.status not in ("optimal", "optimal_inaccurate"):
        if raise_on_failure:
            raise NumericalFailure(f"interior point ended with status {res.status}", res.trace)
        return SolveResult(Status.INFEASIBLE, math.inf, np.full(program.n, np.nan), math.nan,
                           iterations=res.iterations, trace=res.trace, names=names)
    x[free] = res.x * dscale
    # snap to bounds: interior iterates sit a hair inside
    x = np.minimum(np.maximum(x, lb), ub)
    obj = program.objective_value(x)
    scale = max(abs(res.pcost), abs(res.dcost), 1e-9)
    return SolveResult(Status.OPTIMAL, obj, x, abs(res.pcost - res.dcost) / scale,
                       active_interval=active_interval(program, x),
                       bound=min(obj, res.dcost + data["c_const"]), iterations=res.iterations,
                       trace=res.trace, names=names)
