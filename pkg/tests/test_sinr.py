import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from relcov.channel import ChannelParams, LinkGeometry, los_probability, pathloss_db
from relcov.errors import InvalidArgument, InvalidScenario
from relcov.montecarlo import SuccessCounter, run_points
from relcov.scenario import Deployment, Location, ResourceConfig, ServiceArea, build_grid, make_rng
from relcov.sinr import (
    associate,
    association_map,
    latency,
    link_budget,
    sample_sinr,
    simulate_trace,
    sinr_from_powers,
    sinr_threshold,
)

from oracles import SINR_T_256B_10MHZ_1MS

CFG = ResourceConfig()
QUIET = ResourceConfig(noise_enabled=False)
EULER_GAMMA = 0.5772156649015329


def test_single_ap_association():
    assert associate(Location(50, 50), Deployment.from_coords([[0, 0]]), CFG) == 0


def test_nearer_ap_wins_brute_force():
    loc = Location(100, 100)
    dep = Deployment.from_coords([[250, 100], [120, 100]])  # 150 m and 20 m
    gains = []
    for ap in dep.ap_locations:
        geom = LinkGeometry.from_d2d(loc.distance_to(ap))
        p = los_probability(geom.d2d)
        gains.append(p * 10 ** (-pathloss_db(geom, True, CFG.carrier_hz) / 10)
                     + (1 - p) * 10 ** (-pathloss_db(geom, False, CFG.carrier_hz) / 10))
    assert associate(loc, dep, CFG) == int(np.argmax(gains)) == 1


def test_tie_goes_to_lower_index():
    dep = Deployment.from_coords([[60, 100], [140, 100]])
    assert associate(Location(100, 100), dep, CFG) == 0


def test_empty_deployment_rejected():
    with pytest.raises(InvalidScenario):
        associate(Location(1, 1), Deployment.from_coords([]), CFG)
    with pytest.raises(InvalidScenario):
        association_map(build_grid(ServiceArea(), 100.0), Deployment.from_coords([]), CFG)


def test_association_map_indices():
    dep = Deployment.from_coords([[20, 20], [180, 180], [20, 180]])
    amap = association_map(build_grid(ServiceArea(), 10.0), dep, CFG)
    assert len(amap) == 400
    assert set(np.unique(amap.serving)) <= {0, 1, 2}


@pytest.mark.parametrize("params", [
    ChannelParams(),
    ChannelParams(fading="rayleigh"),
    ChannelParams(fading="none", shadow_sigma_los_db=0.0, shadow_sigma_nlos_db=0.0),
])
def test_compiled_trace_matches_reference_sampler(params):
    loc = Location(70, 40)
    dep = Deployment.from_coords([[10, 20], [150, 60], [90, 180], [60, 45]])
    assoc = associate(loc, dep, CFG, params)
    budget = link_budget([[loc.x, loc.y]], dep, CFG, params)
    trace = simulate_trace(budget, 0, params, 500, make_rng(9, 1))
    assert trace.serving_ap == assoc
    rng = make_rng(9, 1)
    ref = np.array([sample_sinr(loc, dep, assoc, CFG, params, rng).sinr_linear for _ in range(500)])
    np.testing.assert_allclose(trace.sinr(CFG.noise_power_w()), ref, rtol=1e-12)


def test_single_link_mean_log_snr():
    # LoS certain (d < 18 m), no shadowing, Rayleigh: ln SNR = ln mean_snr + ln Exp(1)
    params = ChannelParams(fading="rayleigh", shadow_sigma_los_db=0.0)
    loc = Location(100, 100)
    dep = Deployment.from_coords([[110, 100]])
    budget = link_budget([[loc.x, loc.y]], dep, CFG, params)
    mean_snr = budget.power_los_w[0, 0] / CFG.noise_power_w()
    n = 1_000_000
    trace = simulate_trace(budget, 0, params, n, make_rng(4))
    logs = np.log(trace.sinr(CFG.noise_power_w()))
    se = math.pi / math.sqrt(6) / math.sqrt(n)
    assert abs(logs.mean() - (math.log(mean_snr) - EULER_GAMMA)) < 3 * se


def test_colocated_pair_median_one():
    params = ChannelParams(fading="rayleigh", shadow_sigma_los_db=0.0)
    dep = Deployment.from_coords([[105, 100], [105, 100]])
    budget = link_budget([[100.0, 100.0]], dep, QUIET, params)
    sinr = simulate_trace(budget, 0, params, 1_000_000, make_rng(5)).sinr(0.0)
    # median of Exp/Exp is 1; stderr of the sample median is about 2/sqrt(n)
    assert abs(np.median(sinr) - 1.0) < 3 * 2.0 / math.sqrt(1e6)


def test_zero_power_gives_zero_sinr():
    cfg = ResourceConfig(tx_power_dbm=-math.inf)
    dep = Deployment.from_coords([[0, 0], [200, 200]])
    s = sample_sinr(Location(50, 50), dep, 0, cfg, ChannelParams(), np.random.default_rng(0))
    assert s.sinr_linear == 0.0
    assert sinr_from_powers(0.0, 0.0, 0.0) == 0.0


def test_latency_examples():
    assert latency(1.0, 256, 0.256e6) == pytest.approx(1e-3, rel=1e-14)
    assert latency(3.0, 256, 1e6) == pytest.approx(128e-6, rel=1e-14)
    assert latency(0.0, 256, 1e6) == math.inf
    with pytest.raises(InvalidArgument):
        latency(1.0, 0, 1e6)


def test_threshold_examples():
    assert sinr_threshold(256, 10e6, 1e-3) == pytest.approx(SINR_T_256B_10MHZ_1MS, rel=1e-13)
    assert sinr_threshold(256, 0.256e6, 1e-3) == pytest.approx(1.0, rel=1e-14)
    with pytest.raises(InvalidArgument):
        sinr_threshold(256, 10e6, 0)


@given(st.floats(1, 1e5), st.floats(1e3, 1e10), st.floats(1e-6, 1.0))
def test_threshold_latency_round_trip(b, w, g):
    t = sinr_threshold(b, w, g)
    if t == 0.0 or math.isinf(t):  # outside double range
        return
    assert latency(t, b, w) == pytest.approx(g, rel=1e-12)


def test_latency_event_equals_threshold_event():
    params = ChannelParams()
    dep = Deployment.from_coords([[30, 30], [170, 60], [100, 170]])
    budget = link_budget([[80.0, 90.0]], dep, CFG, params)
    sinr = simulate_trace(budget, 0, params, 100_000, make_rng(6)).sinr(CFG.noise_power_w())
    for w in (1e6, 10e6, 50e6):
        t = sinr_threshold(256, w, 1e-3)
        assert np.count_nonzero(latency(sinr, 256, w) <= 1e-3) == np.count_nonzero(sinr >= t)


def test_scale_invariance_without_noise():
    params = ChannelParams()
    dep = Deployment.from_coords([[30, 30], [170, 60], [100, 170]])
    pts = [[80.0, 90.0]]
    a = simulate_trace(link_budget(pts, dep, ResourceConfig(noise_enabled=False), params), 0, params,
                       10_000, make_rng(7)).sinr(0.0)
    b = simulate_trace(link_budget(pts, dep, ResourceConfig(noise_enabled=False, tx_power_dbm=47.0),
                                   params), 0, params, 10_000, make_rng(7)).sinr(0.0)
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_extra_interferer_never_raises_sinr():
    params = ChannelParams()
    loc = Location(60, 60)
    base = [[40, 50], [150, 150]]
    dep = Deployment.from_coords(base)
    more = Deployment.from_coords(base + [[190, 10]])
    assoc = associate(loc, dep, CFG, params)
    assert associate(loc, more, CFG, params) == assoc
    for i in range(2000):
        s0 = sample_sinr(loc, dep, assoc, CFG, params, make_rng(8, i)).sinr_linear
        s1 = sample_sinr(loc, more, assoc, CFG, params, make_rng(8, i)).sinr_linear
        assert s1 <= s0


def test_static_modes_fix_blockage():
    dep = Deployment.from_coords([[30, 30], [170, 60], [100, 170]])
    budget = link_budget([[80.0, 90.0]], dep, CFG)
    p = ChannelParams(fading="none", large_scale_mode="static", association="strongest")
    tr = simulate_trace(budget, 0, p, 100, make_rng(1))
    assert np.all(tr.signal_w == tr.signal_w[0])  # no per-trial randomness left
    p2 = ChannelParams(fading="none", large_scale_mode="static-blockage", association="strongest")
    tr2 = simulate_trace(budget, 0, p2, 100, make_rng(1))
    assert np.unique(tr2.signal_w).size == 100


def test_run_points_worker_independent():
    dep = Deployment.from_coords([[30, 30], [170, 60], [100, 170]])
    grid = build_grid(ServiceArea(), 25.0)
    red = SuccessCounter([0.5, 2.0], CFG.noise_power_w())
    a = run_points(grid.coords, dep, CFG, ChannelParams(), 500, 11, red, chunk_size=7)
    b = run_points(grid.coords, dep, CFG, ChannelParams(), 500, 11, red, chunk_size=13, workers=2)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    sub = run_points(grid.coords[[5, 40]], dep, CFG, ChannelParams(), 500, 11, red, indices=[5, 40])
    assert np.array_equal(sub[0], a[5]) and np.array_equal(sub[1], a[40])
