import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from freqsec import dynamics, security
from freqsec.core import (ChanceSpec, FrService, Portfolio, ProbabilityOutOfRange, SecuritySpec, SystemSnapshot,
                          validate_portfolio)

from conftest import random_portfolio


def bisect_quantile(p, lo=-40.0, hi=40.0):
    """Quantile by bisection on Phi built from math.erfc; independent of the rational approximation."""
    # upper tail works on the complement, where 1 - p is exact
    if p > 0.5:
        def below(x):
            return 0.5 * math.erfc(x / math.sqrt(2)) > 1.0 - p
    else:
        def below(x):
            return 0.5 * math.erfc(-x / math.sqrt(2)) < p
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if below(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_rocof_margins(spec, snap4):
    p = Portfolio([FrService("a", 1, 1)], [0])
    assert security.check_rocof(SystemSnapshot(90000, 0, 1800, p), spec) == 0.0
    assert security.check_rocof(SystemSnapshot(1234, 0, 0, p), spec) == 1234
    assert security.check_rocof(snap4, spec) == 90000


def test_steady_state_margins(snap4):
    assert security.check_steady_state(snap4.portfolio, 1800) == 480
    assert security.check_steady_state(snap4.portfolio, 2280) == 0
    assert security.check_steady_state(Portfolio([FrService("a", 1, 1)], [0]), 10) < 0


def test_interval_conditions_four_services(snap4):
    n = security.nadir_interval_conditions(snap4.portfolio, 1800)
    iv = dynamics.decompose(snap4.portfolio).intervals[n]
    assert (iv.start, iv.end) == (5.5, 9.0)
    assert float(dynamics.fr_total(5.5, snap4.portfolio)) == pytest.approx(1576.5)
    assert float(dynamics.fr_total(9.0, snap4.portfolio)) > 1800


def test_interval_conditions_edges(snap4):
    p = Portfolio([FrService("a", 1000, 10)], [1000])
    assert security.nadir_interval_conditions(p, 1000) == len(dynamics.decompose(p)) - 1
    assert security.nadir_interval_conditions(snap4.portfolio, 0.0) == 0
    with pytest.raises(security.SteadyStateInfeasible):
        security.nadir_interval_conditions(snap4.portfolio, 2281)


def test_soc_terms_four_services(snap4, spec):
    n = security.nadir_interval_conditions(snap4.portfolio, 1800)
    terms = security.nadir_soc_terms(snap4.portfolio, 1800, spec, n)
    assert terms.y2 == pytest.approx(173.0, rel=1e-14)
    assert terms.y1 == pytest.approx(-1101.5625, rel=1e-14)
    assert terms.y3_sq == pytest.approx(1175 ** 2 / 3.2, rel=1e-14)
    assert terms.lhs(180000, 50) == pytest.approx(432229.6875, rel=1e-12)
    rep = security.assess(snap4, spec)
    assert rep.secure
    assert rep.soc_slack_ratio == pytest.approx(0.0018, abs=5e-5)


def test_soc_single_service_matches_depth(spec):
    p = Portfolio([FrService("a", 1000, 10)], [1000])
    terms = security.nadir_soc_terms(p, 1000, spec, 0)
    assert terms.lhs(150000, 50) == pytest.approx(300000)
    assert terms.y3_sq == pytest.approx(312500)
    rep = security.assess(SystemSnapshot(150000, 0, 1000, p), spec)
    assert not rep.nadir_ok
    assert rep.nadir_depth == pytest.approx(0.8333333333333334)


def test_single_service_zero_delay_reduction(spec):
    p = Portfolio([FrService("a", 5000, 7)], [2500])
    terms = security.nadir_soc_terms(p, 1800, spec, 0)
    assert terms.y1 == 0.0
    assert terms.y2 == pytest.approx(2500 / 7)
    assert terms.y3_sq == pytest.approx(1800 ** 2 / (4 * 0.8))


@pytest.mark.parametrize("p", [0.5, 0.99, 0.01, 1e-10, 0.02425, 0.97575, 1 - 1e-10, 0.3, 0.999999])
def test_normal_quantile(p):
    x = security.normal_inv_cdf(p)
    assert abs(security.normal_cdf(x) - p) <= 1e-9
    assert x == pytest.approx(bisect_quantile(p), abs=1e-9)


def test_normal_quantile_examples():
    assert security.normal_inv_cdf(0.5) == 0.0
    assert security.normal_inv_cdf(0.99) == pytest.approx(2.3263479, abs=1e-6)
    assert security.normal_inv_cdf(0.01) == pytest.approx(-2.3263479, abs=1e-6)
    for bad in (0.0, 1.0, -0.1, 2.0):
        with pytest.raises(ProbabilityOutOfRange):
            security.normal_inv_cdf(bad)


@given(st.floats(1e-12, 1 - 1e-12))
def test_normal_quantile_accuracy(p):
    x = security.normal_inv_cdf(p)
    assert abs(security.normal_cdf(x) - p) <= 1e-9


def test_chance_adjusted_inertia_examples():
    assert security.chance_adjusted_inertia(100, ChanceSpec(50, 0), 0.99) == 150
    assert security.chance_adjusted_inertia(100, ChanceSpec(50, 30), 0.5) == 150
    assert security.chance_adjusted_inertia(0, ChanceSpec(5000, 1000), 0.99) == pytest.approx(2673.65, abs=0.01)


@given(st.floats(1, 1e4), st.floats(0.01, 0.98), st.floats(0.001, 0.01))
def test_chance_monotone(sigma, p, dp):
    c = ChanceSpec(1000, sigma)
    assert security.chance_adjusted_inertia(0, c, p + dp) < security.chance_adjusted_inertia(0, c, p)
    if p > 0.5:
        c2 = ChanceSpec(1000, sigma * 1.1)
        assert security.chance_adjusted_inertia(0, c2, p) < security.chance_adjusted_inertia(0, c, p)


def test_assess_chance_case(snap4, spec):
    chance = ChanceSpec(0.0, 5000.0, 0.99, 0.99)
    rep = security.assess(replace(snap4, h_demand=0.0), spec, chance)
    assert not rep.nadir_ok
    assert rep.rocof_ok
    drop = 180000 - security.chance_adjusted_inertia(180000, chance, 0.99)
    assert drop == pytest.approx(11632, abs=1)


def test_assess_zero_loss(snap4, spec):
    rep = security.assess(replace(snap4, p_loss=0.0), spec)
    assert rep.secure
    assert rep.nadir_depth == 0.0


def test_assess_steady_state_failure(snap4, spec):
    rep = security.assess(replace(snap4, p_loss=2500.0), spec)
    assert not rep.steady_state_ok
    assert rep.violations() == ["steady-state", "nadir"]


def test_negative_effective_inertia_not_clamped(snap4, spec):
    chance = ChanceSpec(0.0, 1e6, 0.99, 0.99)
    rep = security.assess(snap4, spec, chance)
    assert not rep.rocof_ok and not rep.nadir_ok
    assert rep.rocof_margin < 0


def test_assess_matches_depth_randomized(spec):
    rng = np.random.default_rng(7)
    disagreements = 0
    for _ in range(10_000):
        p = random_portfolio(rng, 6)
        pl = float(rng.uniform(0, p.total))
        snap = SystemSnapshot(float(rng.uniform(2e4, 4e5)), 0.0, pl, p)
        rep = security.assess(snap, spec)
        _, depth, _ = dynamics.nadir(snap, spec)
        if abs(depth - spec.delta_f_max) <= 1e-9 * spec.delta_f_max:
            continue
        disagreements += rep.nadir_ok != (depth <= spec.delta_f_max)
    assert disagreements == 0


@given(st.integers(0, 10**6))
def test_zero_delay_terms_equal_reference(seed):
    rng = np.random.default_rng(seed)
    p = random_portfolio(rng, 6, delays=False)
    spec = SecuritySpec()
    pl = float(rng.uniform(1, p.total))
    n = security.nadir_interval_conditions(p, pl)
    terms = security.nadir_soc_terms(p, pl, spec, n)
    x1, x2, rhs = security.zero_delay_terms(p, pl, spec, n)
    assert terms.y1 == pytest.approx(x1, rel=1e-12, abs=1e-12)
    assert terms.y2 == pytest.approx(x2, rel=1e-12)
    assert terms.y3_sq == pytest.approx(rhs, rel=1e-12, abs=1e-9)


@pytest.mark.parametrize("backend", ["numpy", "numba"])
def test_assess_batch_matches_scalar(backend, spec, monkeypatch):
    from freqsec import kernels
    impl = kernels.numpy_impl if backend == "numpy" else kernels.numba_impl
    if impl is None:
        pytest.skip("numba not installed")
    monkeypatch.setattr(kernels, "batch_security", impl.batch_security)
    rng = np.random.default_rng(3)
    for _ in range(30):
        p = random_portfolio(rng, 4)
        alloc = rng.uniform(0, 1000, (200, len(p)))
        h, pl = float(rng.uniform(5e4, 3e5)), float(rng.uniform(100, 1500))
        chance = ChanceSpec(2e4, 3e3) if rng.random() < 0.3 else None
        got = security.assess_batch(alloc, p.services, h, pl, spec, chance)
        ref = [security.assess(SystemSnapshot(h, 0.0, pl, p.with_allocations(a)), spec, chance).secure
               for a in alloc]
        assert list(got) == ref


def test_nadir_check_when_fr_lands_on_loss(spec):
    # FR total sits on P_L to 1e-7 MW and both cone sides are ~1e-12; the MW allowance keeps the check stable
    svcs = [FrService("s0", 1059.560611866396, 1.4944368372440082, 0.0),
            FrService("s2", 1770.2098106943427, 5.33139504711244, 0.0),
            FrService("s1", 2447.723088726348, 10.767129215041525, 0.8512966885153723)]
    p = Portfolio(svcs, [897.4710223734813, 791.8717352658464, 2.9496776586078736e-06])
    snap = SystemSnapshot(86921.79419979031, 0.0, 1689.3427607206756, p)
    _, depth, _ = dynamics.nadir(snap, spec)
    assert depth == pytest.approx(spec.delta_f_max, rel=1e-8)
    assert security.assess(snap, spec, rtol=1e-6).secure
    assert security.assess_batch([p.allocations], p.services, snap.h_gen, snap.p_loss, spec, rtol=1e-6)[0]
    # a real shortfall is still caught
    assert not security.assess(replace(snap, p_loss=1700.0), spec, rtol=1e-6).secure
