import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from freqsec import dynamics
from freqsec.core import EmptyPortfolio, FrService, Portfolio, SecuritySpec, SystemSnapshot, ZeroInertia, \
    validate_portfolio
from freqsec.security import SteadyStateInfeasible

from conftest import random_portfolio


def test_breakpoints_four_services(snap4):
    dec = dynamics.decompose(snap4.portfolio)
    assert np.allclose(dec.breakpoints, [0.5, 1, 3, 5.5, 9, 10])


def test_two_services_no_delay():
    p = validate_portfolio(Portfolio([FrService("a", 10, 1), FrService("b", 10, 10)], [5, 5]))
    dec = dynamics.decompose(p)
    assert list(dec.breakpoints) == [1, 10]
    assert dec.intervals[0].ramping == (0, 1) and dec.intervals[0].delivered == ()
    assert dec.intervals[1].ramping == (1,) and dec.intervals[1].delivered == (0,)


def test_leading_zero_slope_interval():
    p = Portfolio([FrService("a", 10, 3, 2)], [6])
    dec = dynamics.decompose(p)
    assert list(dec.breakpoints) == [2, 5]
    assert dec.intervals[0].slope == 0.0
    assert dec.intervals[1].slope == 2.0


def test_empty_portfolio():
    with pytest.raises(EmptyPortfolio):
        dynamics.decompose(Portfolio([]))


def test_fr_total_examples(snap4):
    p = snap4.portfolio
    assert dynamics.fr_total(3.0, p) == pytest.approx(894.0, abs=1e-12)
    assert dynamics.fr_total(0.0, p) == 0.0
    assert dynamics.fr_total(20.0, p) == pytest.approx(2280.0, abs=1e-12)
    assert dynamics.fr_total(-1.0, p) == 0.0


def test_fr_total_by_slope_integration(snap4):
    # oracle: walk the interval slopes from t=0
    dec = dynamics.decompose(snap4.portfolio)
    fr, start = 0.0, 0.0
    for iv in dec.intervals:
        t_end = min(iv.end, 3.0)
        if t_end > start:
            fr += iv.slope * (t_end - start)
        start = iv.end
        if start >= 3.0:
            break
    assert fr == pytest.approx(894.0, rel=1e-12)


def test_delta_f_examples(spec):
    snap = SystemSnapshot(180000, 0, 1800, Portfolio([FrService("a", 1000, 1)], [0]))
    assert dynamics.delta_f(1.0, snap, spec) == pytest.approx(-0.25, abs=1e-15)
    snap = SystemSnapshot(150000, 0, 1000, Portfolio([FrService("a", 1000, 10)], [1000]))
    # f0/(2H)(R t^2/(2T) - P t) = 50/300000 * (5000 - 10000)
    assert dynamics.delta_f(10.0, snap, spec) == pytest.approx(-0.8333333333333334, rel=1e-12)
    assert dynamics.delta_f(0.0, snap, spec) == 0.0


def test_delta_f_zero_inertia(spec):
    snap = SystemSnapshot(0, 0, 100, Portfolio([FrService("a", 1000, 1)], [0]))
    with pytest.raises(ZeroInertia):
        dynamics.delta_f(1.0, snap, spec)
    with pytest.raises(ZeroInertia):
        dynamics.rocof_initial(snap, spec)


def test_rocof_initial(spec, snap4):
    p = Portfolio([FrService("a", 1000, 1)], [0])
    assert dynamics.rocof_initial(SystemSnapshot(90000, 0, 1800, p), spec) == pytest.approx(0.5)
    assert dynamics.rocof_initial(SystemSnapshot(90000, 0, 0, p), spec) == 0.0
    assert dynamics.rocof_initial(snap4, spec) == pytest.approx(0.25)


def test_nadir_four_services(snap4, spec):
    t, depth, n = dynamics.nadir(snap4, spec)
    assert t == pytest.approx(1175 / 173, rel=1e-14)
    iv = dynamics.decompose(snap4.portfolio).intervals[n]
    ids = [s.id for s in snap4.portfolio.services]
    assert {ids[k] for k in iv.delivered} == {"FR1", "FR3"}
    assert {ids[k] for k in iv.ramping} == {"FR2", "FR4"}
    assert (iv.start, iv.end) == (5.5, 9.0)
    assert abs(dynamics.delta_f(t, snap4, spec) + 0.8) <= 0.005 * 0.8


def test_nadir_single_service(spec):
    snap = SystemSnapshot(150000, 0, 1000, Portfolio([FrService("a", 1000, 10)], [1000]))
    t, depth, n = dynamics.nadir(snap, spec)
    assert t == pytest.approx(10.0)
    assert depth == pytest.approx(0.8333333333333334)


def test_nadir_skips_zero_slope_interval(spec):
    snap = SystemSnapshot(150000, 0, 100, Portfolio([FrService("a", 1000, 4, 2)], [400]))
    t, _, n = dynamics.nadir(snap, spec)
    assert n == 1
    assert t == pytest.approx(3.0)


def test_nadir_steady_state_infeasible(spec):
    snap = SystemSnapshot(150000, 0, 1000, Portfolio([FrService("a", 1000, 10)], [999]))
    with pytest.raises(SteadyStateInfeasible):
        dynamics.nadir(snap, spec)


def test_nadir_zero_loss(spec, snap4):
    from dataclasses import replace
    t, depth, n = dynamics.nadir(replace(snap4, p_loss=0.0), spec)
    assert (t, depth, n) == (0.0, 0.0, 0)


def test_breakpoint_crossing_is_left_and_consistent(spec):
    # FR reaches P_L exactly at t=1, the end of the first interval
    p = validate_portfolio(Portfolio([FrService("a", 1000, 1), FrService("b", 1000, 4)], [400, 400]))
    snap = SystemSnapshot(50000, 0, 500, p)
    t, depth, n = dynamics.nadir(snap, spec)
    assert n == 0 and t == pytest.approx(1.0)
    dec = dynamics.decompose(p)
    # both adjacent affine pieces agree at the breakpoint
    assert dec.intervals[0].fr(1.0) == pytest.approx(dec.intervals[1].fr(1.0), abs=1e-12)


@given(st.integers(0, 10**6))
def test_decomposition_invariants(seed):
    rng = np.random.default_rng(seed)
    p = random_portfolio(rng, 10)
    dec = dynamics.decompose(p)
    bps = dec.breakpoints
    assert np.all(np.diff(bps) > 0)
    total = p.total
    for iv in dec.intervals:
        assert not set(iv.delivered) & set(iv.ramping)
        mid = 0.5 * (iv.start + iv.end)
        h = 1e-4 * (iv.end - iv.start)
        fd = (dynamics.fr_total(mid + h, p) - dynamics.fr_total(mid - h, p)) / (2 * h)
        assert fd == pytest.approx(iv.slope, rel=1e-6, abs=1e-9 * max(total, 1))
        assert iv.fr(mid) == pytest.approx(float(dynamics.fr_total(mid, p)), rel=1e-12, abs=1e-9)
    for a, b in zip(dec.intervals, dec.intervals[1:]):
        assert abs(a.fr(a.end) - b.fr(a.end)) < 1e-9 * max(total, 1.0)
    t = np.linspace(0, bps[-1] + 1, 500)
    fr = dynamics.fr_total(t, p)
    assert np.all(np.diff(fr) >= -1e-9)
    assert fr[-1] == pytest.approx(total)


@given(st.integers(0, 10**6))
def test_delta_f_matches_quadrature(seed):
    rng = np.random.default_rng(seed)
    p = random_portfolio(rng, 10)
    spec = SecuritySpec()
    snap = SystemSnapshot(float(rng.uniform(5e4, 3e5)), 0.0, float(rng.uniform(0, 2000)), p)
    t = np.arange(0, 15.0005, 1e-3)
    fr = dynamics.fr_total(t, p)
    integ = np.concatenate([[0.0], np.cumsum(0.5 * (fr[1:] + fr[:-1]) * np.diff(t))])
    ref = spec.f_nominal / (2 * snap.inertia) * (integ - snap.p_loss * t)
    assert np.max(np.abs(dynamics.delta_f(t, snap, spec) - ref)) < 1e-6


@given(st.integers(0, 10**6))
def test_nadir_properties(seed):
    rng = np.random.default_rng(seed)
    p = random_portfolio(rng, 8)
    pl = float(rng.uniform(0, p.total))
    spec = SecuritySpec()
    snap = SystemSnapshot(1e5, 0.0, pl, p)
    t, depth, n = dynamics.nadir(snap, spec)
    assert float(dynamics.fr_total(t, p)) == pytest.approx(pl, abs=1e-9 * max(pl, 1.0))
    if t > 1e-6:
        # frequency falling just before the nadir, not after
        assert float(dynamics.fr_total(t * (1 - 1e-7), p)) <= pl + 1e-9 * pl
        assert float(dynamics.delta_f(t, snap, spec)) <= float(dynamics.delta_f(t * 0.999, snap, spec)) + 1e-12
    grid = np.linspace(0, max(t * 2, 1.0), 2001)
    assert depth >= -float(np.min(dynamics.delta_f(grid, snap, spec))) - 1e-9


@given(st.integers(0, 10**6))
def test_zero_delay_nadir_time(seed):
    rng = np.random.default_rng(seed)
    p = random_portfolio(rng, 6, delays=False)
    pl = float(rng.uniform(1, p.total))
    t, n = dynamics.nadir_time(p, pl)
    # delay-free closed form: t = (P_L - sum_K R) / sum_L R/T on the crossing interval
    ts = sorted({s.ramp_duration for s in p.services})
    r = np.array(p.allocations)
    T = np.array([s.ramp_duration for s in p.services])
    prev = ts[n - 1] if n > 0 else 0.0
    k = T <= prev
    ref = (pl - r[k].sum()) / (r[~k] / T[~k]).sum()
    assert t == pytest.approx(ref, rel=1e-12)


def test_fr_energy_matches_quadrature(snap4):
    t = np.linspace(0, 12, 120001)
    fr = dynamics.fr_total(t, snap4.portfolio)
    ref = np.sum(0.5 * (fr[1:] + fr[:-1]) * np.diff(t))
    assert float(dynamics.fr_energy(12.0, snap4.portfolio)) == pytest.approx(ref, rel=1e-9)
