import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from freqsec import conic, security
from freqsec.conic import (ConicProgram, Infeasible, NodeLimit, ProgramCosts, Status, UnboundedBigM, build_program,
                           check_solution, dumps_program, loads_program, solve_by_enumeration, solve_continuous,
                           solve_mi)
from freqsec.core import ChanceSpec, FrService, SecuritySpec

from conftest import four_services


def fixed_program(services, h=180000.0, pl=1800.0, spec=SecuritySpec(), **kw):
    return build_program(services, spec, inertia_bounds=(h, h), p_loss_bounds=(pl, pl), **kw)


def costed(services, costs):
    return [FrService(s.id, s.capacity_max, s.ramp_duration, s.activation_delay, c) for s, c in zip(services, costs)]


def test_counts_two_services():
    prog = fixed_program([FrService("a", 1000, 1), FrService("b", 1000, 10)])
    assert len(prog.rsoc_blocks) == 2
    assert len(prog.binaries) == 2
    gating = [r for r in prog.rows if r.name.startswith("nadir_")]
    assert len(gating) == 4
    names = {r.name for r in prog.rows}
    assert {"rocof", "steady_state", "one_interval"} <= names
    one = next(r for r in prog.rows if r.name == "one_interval")
    assert one.sense == "=" and one.rhs == 1 and set(one.coefs) == set(prog.binaries)


def test_single_service_fixed_binary():
    prog = fixed_program([FrService("a", 5000, 10)])
    assert len(prog.rsoc_blocks) == 1
    (z,) = prog.binaries
    assert prog.variables[z].lb == prog.variables[z].ub == 1.0


def test_four_services_six_cones():
    prog = fixed_program(four_services())
    assert len(prog.rsoc_blocks) == 6
    assert len(prog.binaries) == 6


def test_big_m_from_bounds():
    prog = fixed_program(four_services())
    assert all(math.isfinite(l.big_m) and l.big_m >= 0 for l in prog.links)
    assert len(prog.links) == 2 * 6 + 2 * 6
    for link in prog.links:
        if link.target == "row":
            row = prog.rows[link.index]
            assert row.coefs.get(link.binary, 0.0) == pytest.approx(link.big_m)
            # with the binary at 0 the row is slack over the whole box
            coefs = {j: a for j, a in row.coefs.items() if j != link.binary}
            _, hi = prog.expr_range(coefs)
            assert hi <= row.rhs + 1e-9 * max(1.0, abs(row.rhs))


def test_missing_bounds():
    with pytest.raises(UnboundedBigM):
        build_program(four_services(), SecuritySpec())
    with pytest.raises(UnboundedBigM):
        build_program(four_services(), SecuritySpec(), inertia_bounds=(0, math.inf))


def test_single_service_analytic_optimum():
    spec = SecuritySpec()
    h, pl, T = 180000.0, 1800.0, 10.0
    prog = fixed_program([FrService("a", 1e5, T, 0, 1.0)], h, pl)
    res = solve_continuous(prog)
    r_star = pl ** 2 * T / (4 * spec.delta_f_max * (h / spec.f_nominal))
    assert res.status == Status.OPTIMAL
    assert res["R[a]"] == pytest.approx(r_star, rel=1e-5)
    assert res.duality_gap <= 1e-6


def test_capacity_shortfall_infeasible():
    prog = fixed_program([FrService("a", 1000, 10, 0, 1.0)], pl=1800)
    assert solve_continuous(prog).status == Status.INFEASIBLE
    with pytest.raises(Infeasible):
        solve_mi(prog)
    with pytest.raises(Infeasible):
        solve_by_enumeration(prog)


def test_feasibility_only_program():
    prog = ConicProgram()
    x = prog.add_var("x", 0, 10)
    y = prog.add_var("y", 0, 10)
    prog.add_row({x: 1, y: 1}, "<=", 5)
    prog.add_rsoc(({x: 1.0}, 0.0), ({y: 1.0}, 0.0), ({}, 1.0))
    res = solve_continuous(prog)
    assert res.status == Status.OPTIMAL
    assert res.objective == 0.0
    assert prog.violation(res.x) <= 1e-8


def test_integral_root_single_node():
    prog = fixed_program([FrService("a", 1e5, 10, 0, 1.0)])
    res = solve_mi(prog)
    assert res.node_count == 1
    assert res.objective == pytest.approx(solve_continuous(prog).objective, rel=1e-9)


def test_selects_only_feasible_interval():
    # interval (0, 1] would need R_b >= 9000 > capacity, so the crossing must be in (1, 10]
    svcs = [FrService("a", 100, 1, 0, 1.0), FrService("b", 5000, 10, 0, 1.0)]
    prog = fixed_program(svcs, h=400000, pl=1000)
    res = solve_mi(prog, 1e-6)
    assert res.active_interval == 1
    z = prog.var_index("z[1]")
    assert res.x[z] == pytest.approx(1.0)


def test_four_services_mi_matches_enumeration():
    svcs = costed(four_services(), [4.0, 1.0, 2.0, 1.5])
    prog = fixed_program(svcs)
    mi = solve_mi(prog)
    en = solve_by_enumeration(prog)
    assert mi.objective == pytest.approx(en.objective, rel=max(1e-6, 0.005))
    for rep in check_solution(prog, mi):
        assert rep.secure
    mi_tight = solve_mi(prog, 1e-7)
    assert mi_tight.objective == pytest.approx(en.objective, rel=1e-6)


def test_round_trip_interval_matches_assess():
    svcs = costed(four_services(), [4.0, 1.0, 2.0, 1.5])
    prog = fixed_program(svcs)
    res = solve_mi(prog, 1e-7)
    (rep,) = check_solution(prog, res)
    assert rep.secure
    assert rep.nadir_interval == res.active_interval


def test_relaxation_bounds_monotone():
    svcs = costed(four_services(), [4.0, 1.0, 2.0, 1.5])
    prog = build_program(svcs, SecuritySpec(), inertia_bounds=(100000, 250000), p_loss_bounds=(1800, 1800),
                         costs=ProgramCosts(inertia=0.01))
    res = solve_mi(prog, 1e-7)
    root_bound = res.nodes[0][2]
    assert root_bound <= res.objective + 1e-9 * abs(res.objective)
    parents = {nid: b for nid, _, b in res.nodes}
    for nid, parent, bound in res.nodes:
        if parent is not None and math.isfinite(bound):
            assert bound >= parents[parent] - 1e-6 * max(1.0, abs(bound))


def test_big_m_inactivity():
    svcs = costed(four_services(), [4.0, 1.0, 2.0, 1.5])
    prog = fixed_program(svcs)
    res = solve_mi(prog, 1e-7)
    chosen = prog.var_index(f"z[{res.active_interval}]")
    stripped = prog.copy()
    drop_rows = {l.index for l in prog.links if l.target == "row" and l.binary != chosen}
    drop_cones = {l.index for l in prog.links if l.target == "rsoc" and l.binary != chosen}
    stripped.rows = [r for i, r in enumerate(prog.rows) if i not in drop_rows]
    stripped.rsoc_blocks = [c for i, c in enumerate(prog.rsoc_blocks) if i not in drop_cones]
    lb, ub = stripped.bounds()
    for z in stripped.binaries:
        lb[z] = ub[z] = 1.0 if z == chosen else 0.0
    again = solve_continuous(stripped, lb, ub)
    assert again.objective == pytest.approx(res.objective, rel=1e-6)


def test_gap_reached_status():
    svcs = costed(four_services(), [4.0, 1.0, 2.0, 1.5])
    prog = build_program(svcs, SecuritySpec(), inertia_bounds=(100000, 250000), p_loss_bounds=(1800, 1800),
                         costs=ProgramCosts(inertia=0.01))
    loose = solve_mi(prog, 0.5)
    assert loose.status in (Status.GAP_REACHED, Status.OPTIMAL)
    assert loose.duality_gap <= 0.5
    tight = solve_mi(prog, 1e-9)
    assert tight.objective <= loose.objective + 1e-9
    assert tight.duality_gap <= 1e-6


def test_node_limit():
    svcs = costed(four_services(), [4.0, 1.0, 2.0, 1.5])
    prog = build_program(svcs, SecuritySpec(), inertia_bounds=(100000, 250000), p_loss_bounds=(1800, 1800),
                         costs=ProgramCosts(inertia=0.01))
    full = solve_mi(prog, 1e-9)
    if full.node_count > 1:
        with pytest.raises(NodeLimit):
            solve_mi(prog, 1e-9, node_limit=1)


def test_deterministic():
    svcs = costed(four_services(), [4.0, 1.0, 2.0, 1.5])
    prog = fixed_program(svcs)
    a, b = solve_mi(prog), solve_mi(prog)
    assert np.array_equal(a.x, b.x) and a.node_count == b.node_count


def test_chance_program_uses_adjusted_inertia():
    spec = SecuritySpec()
    chance = ChanceSpec(20000.0, 2000.0, 0.99, 0.99)
    svcs = costed(four_services(), [1.0, 1.0, 1.0, 1.0])
    prog = build_program(svcs, spec, chance=chance, inertia_bounds=(0, 300000), p_loss_bounds=(1800, 1800),
                         costs=ProgramCosts(inertia=0.001))
    res = solve_mi(prog, 1e-7)
    (rep,) = check_solution(prog, res)
    assert rep.secure
    # RoCoF row binds against the chance-adjusted demand inertia
    need = security.rocof_requirement(1800, spec) - security.chance_adjusted_inertia(0, chance, 0.99)
    assert res["H"] >= need - 1e-6 * need


def test_text_format_round_trip():
    svcs = costed(four_services(), [4.0, 1.0, 2.0, 1.5])
    prog = fixed_program(svcs)
    text = dumps_program(prog)
    assert text.splitlines()[0] == "FREQSEC-CONIC 1"
    kinds = {ln.split()[0] for ln in text.splitlines()[1:]}
    assert {"VAR", "BIN", "LIN", "RSOC", "LINK", "OBJ"} <= kinds
    back = loads_program(text)
    assert dumps_program(back) == text
    assert solve_mi(back, 1e-7).objective == solve_mi(prog, 1e-7).objective


def test_text_format_rejects_garbage():
    with pytest.raises(ValueError):
        loads_program("hello\n")
    with pytest.raises(ValueError):
        loads_program("FREQSEC-CONIC 1\nFOO 1\n")


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6))
def test_mi_enumeration_agree_randomized(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 4))
    svcs = [FrService(f"s{i}", float(rng.uniform(800, 3000)), float(rng.uniform(0.5, 12)),
                      float(rng.uniform(0, 1.5)) if rng.random() < 0.5 else 0.0, float(rng.uniform(0.5, 5)))
            for i in range(n)]
    h = float(rng.uniform(8e4, 3e5))
    prog = fixed_program(svcs, h=h, pl=float(rng.uniform(500, 1800)))
    try:
        en = solve_by_enumeration(prog)
    except Infeasible:
        with pytest.raises(Infeasible):
            solve_mi(prog)
        return
    mi = solve_mi(prog)
    assert mi.objective == pytest.approx(en.objective, rel=max(1e-6, 0.005))
    assert all(r.secure for r in check_solution(prog, mi))
