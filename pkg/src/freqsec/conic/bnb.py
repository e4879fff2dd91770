"""Best-first branch-and-bound over the integer variables of a ConicProgram."""
from __future__ import annotations

import heapq
import itertools
import math

import numpy as np

from .program import (ConicProgram, Infeasible, NodeLimit, SolveResult, Status, active_interval,
                      solve_continuous)

INT_TOL = 1e-6


def _fractional(program: ConicProgram, x) -> int | None:
    """Most fractional integer variable; ties go to the lowest index."""
    best, best_frac = None, INT_TOL
    for j in program.integer_indices:
        f = abs(x[j] - round(x[j]))
        if f > best_frac + 1e-12:
            best, best_frac = j, f
    return best


def _polish(program, x, lb, ub) -> SolveResult | None:
    """Fix integers at their rounded values and re-solve the continuous part."""
    lb2, ub2 = lb.copy(), ub.copy()
    for j in program.integer_indices:
        v = float(np.clip(round(x[j]), lb[j], ub[j]))
        lb2[j] = ub2[j] = v
    res = solve_continuous(program, lb2, ub2)
    return res if res.ok else None


def _rounding_heuristic(program, x, lb, ub) -> SolveResult | None:
    cand = np.array(x, dtype=float)
    in_group = set()
    for group in program.selector_groups:
        free = [j for j in group if ub[j] > 0.5]
        if not free:
            return None
        pick = max(free, key=lambda j: (cand[j], -j))
        for j in group:
            cand[j] = 1.0 if j == pick else 0.0
            in_group.add(j)
    for j in program.integer_indices:
        if j not in in_group:
            cand[j] = min(math.ceil(cand[j] - INT_TOL), ub[j])
    return _polish(program, cand, lb, ub)


def solve_mi(program: ConicProgram, gap: float = 0.005, *, node_limit: int = 20000,
             heuristic_every: int = 25) -> SolveResult:
    """Branch-and-bound with continuous relaxations as lower bounds.

    Node selection is best-bound with insertion order breaking ties; branching
    picks the most fractional integer. Terminates once the incumbent is within
    ``gap`` (relative) of the best open bound.
    """
    lb0, ub0 = program.bounds()
    counter = itertools.count()
    names = [v.name for v in program.variables]
    nodes = []
    incumbent: SolveResult | None = None
    heap = []
    solved = 0

    def consider(res: SolveResult):
        nonlocal incumbent
        if res is not None and res.ok and (incumbent is None or res.objective < incumbent.objective - 1e-12):
            incumbent = res

    def open_node(lb, ub, parent):
        nonlocal solved
        res = solve_continuous(program, lb, ub)
        solved += 1
        nid = len(nodes)
        nodes.append((nid, parent, res.bound if res.ok else math.inf))
        if not res.ok:
            return
        j = _fractional(program, res.x)
        if j is None:
            consider(_polish(program, res.x, lb, ub) or res)
            return
        if heuristic_every and (nid % heuristic_every == 0):
            consider(_rounding_heuristic(program, res.x, lb, ub))
        heapq.heappush(heap, (res.bound, next(counter), nid, lb, ub, res.x, j))

    open_node(lb0.copy(), ub0.copy(), None)
    status = Status.OPTIMAL
    best_bound = incumbent.objective if incumbent is not None else math.inf
    while heap:
        bound = heap[0][0]
        if incumbent is not None:
            thresh = incumbent.objective - gap * max(abs(incumbent.objective), 1e-9)
            if bound >= thresh - 1e-9 * max(1.0, abs(incumbent.objective)):
                if bound < incumbent.objective - 1e-7 * max(1.0, abs(incumbent.objective)):
                    status = Status.GAP_REACHED
                best_bound = min(bound, incumbent.objective)
                break
        if solved >= node_limit:
            best = incumbent
            raise NodeLimit(f"node limit {node_limit} reached", best)
        bound, _, nid, lb, ub, x, j = heapq.heappop(heap)
        v = x[j]
        lo_ub = ub.copy()
        lo_ub[j] = math.floor(v)
        hi_lb = lb.copy()
        hi_lb[j] = math.ceil(v)
        open_node(lb, lo_ub, nid)
        open_node(hi_lb, ub, nid)
    else:
        best_bound = incumbent.objective if incumbent is not None else math.inf

    if incumbent is None:
        raise Infeasible("no integer-feasible point", SolveResult(Status.INFEASIBLE, math.inf,
                                                                    np.full(program.n, np.nan), math.nan,
                                                                    node_count=solved, names=names,
                                                                    nodes=nodes))
    obj = incumbent.objective
    rel = (obj - best_bound) / max(abs(obj), 1e-9)
    return SolveResult(status, obj, incumbent.x, max(rel, 0.0), node_count=solved,
                       active_interval=active_interval(program, incumbent.x), bound=best_bound,
                       iterations=incumbent.iterations, names=names, nodes=nodes)


def solve_by_enumeration(program: ConicProgram, gap: float = 0.005, max_hypotheses: int = 4096) -> SolveResult:
    """Solve once per interval hypothesis with that hypothesis's selectors fixed.

    Remaining integer variables (commitment counts) are handled by
    :func:`solve_mi` within each hypothesis.
    """
    groups = program.selector_groups
    if not groups:
        raise ValueError("program has no interval selectors to enumerate")
    combos = 1
    for g in groups:
        combos *= len(g)
    if combos > max_hypotheses:
        raise ValueError(f"{combos} hypotheses exceed the limit {max_hypotheses}")
    lb0, ub0 = program.bounds()
    others = [j for j in program.integer_indices if not any(j in g for g in groups)]
    best = None
    count = 0
    names = [v.name for v in program.variables]
    for choice in itertools.product(*[range(len(g)) for g in groups]):
        lb, ub = lb0.copy(), ub0.copy()
        feasible_fix = True
        for g, k in zip(groups, choice):
            for i, j in enumerate(g):
                val = 1.0 if i == k else 0.0
                if not (lb0[j] - 1e-9 <= val <= ub0[j] + 1e-9):
                    feasible_fix = False
                lb[j] = ub[j] = val
        if not feasible_fix:
            continue
        if others:
            sub = program.copy()
            for j in range(sub.n):
                sub.variables[j].lb, sub.variables[j].ub = lb[j], ub[j]
            try:
                res = solve_mi(sub, gap)
            except Infeasible:
                count += 1
                continue
            count += res.node_count
        else:
            res = solve_continuous(program, lb, ub)
            count += 1
        if res.ok and (best is None or res.objective < best.objective - 1e-12):
            best = res
    if best is None:
        raise Infeasible("every interval hypothesis is infeasible",
                         SolveResult(Status.INFEASIBLE, math.inf, np.full(program.n, np.nan), math.nan,
                                     node_count=count, names=names))
    return SolveResult(best.status, best.objective, best.x, best.duality_gap, node_count=count,
                       active_interval=active_interval(program, best.x), bound=best.bound,
                       iterations=best.iterations, names=names)
