import csv
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from relcov.channel import ChannelParams
from relcov.errors import InvalidArgument
from relcov.reliability import (
    ReliabilityMap,
    analytic_reliability_single_link,
    binomial_stderr,
    estimate_reliability,
    reliability_coverage,
    reliability_map,
)
from relcov.scenario import (
    Deployment,
    Location,
    Requirements,
    ResourceConfig,
    ServiceArea,
    build_grid,
    make_rng,
)
from relcov.sinr import link_budget, sinr_threshold

from oracles import EXP_MINUS_3

# single LoS link (d < 18 m), no shadowing, Rayleigh fading, noise only
SINGLE = ChannelParams(fading="rayleigh", shadow_sigma_los_db=0.0)
AP = Deployment.from_coords([[100.0, 100.0]])
USER = Location(112.0, 100.0)


def _single_link_setup(ratio):
    """Config whose latency threshold sits at ``ratio`` times the mean SNR."""
    cfg = ResourceConfig(bandwidth_hz=1e6, tx_power_dbm=-40.0)
    budget = link_budget([[USER.x, USER.y]], AP, cfg, SINGLE)
    mean_snr = budget.power_los_w[0, 0] / cfg.noise_power_w()
    t = ratio * mean_snr
    gamma = 256.0 / (cfg.bandwidth_hz * math.log2(1.0 + t))
    req = Requirements(gamma_latency=gamma, payload_bits=256.0)
    assert sinr_threshold(256.0, cfg.bandwidth_hz, gamma) == pytest.approx(t, rel=1e-12)
    return cfg, req, mean_snr


@pytest.mark.parametrize("ratio", [0.1, 1.0, 3.0])
def test_single_link_matches_closed_form(ratio):
    cfg, req, _ = _single_link_setup(ratio)
    alpha, se = estimate_reliability(USER, AP, cfg, req, 200_000, make_rng(1, int(ratio * 10)), SINGLE)
    assert abs(alpha - math.exp(-ratio)) < 3 * se


def test_estimator_unbiased_over_repeats():
    cfg, req, _ = _single_link_setup(1.0)
    est = [estimate_reliability(USER, AP, cfg, req, 2_000, make_rng(2, r), SINGLE)[0] for r in range(200)]
    se = math.sqrt(math.exp(-1) * (1 - math.exp(-1)) / (2_000 * 200))
    assert abs(np.mean(est) - math.exp(-1)) < 3 * se


def test_huge_bandwidth_gives_full_reliability():
    cfg = ResourceConfig(bandwidth_hz=1e15)
    dep = Deployment.from_coords([[20, 20], [180, 180]])
    alpha, se = estimate_reliability(Location(100, 100), dep, cfg, Requirements(), 1000, make_rng(0),
                                     ChannelParams())
    assert alpha == 1.0 and se == 0.0


def test_analytic_examples():
    assert analytic_reliability_single_link(2.0, 0.0) == 1.0
    assert analytic_reliability_single_link(2.0, 2.0) == pytest.approx(math.exp(-1))
    assert analytic_reliability_single_link(2.0, 6.0) == pytest.approx(EXP_MINUS_3, rel=1e-14)
    with pytest.raises(InvalidArgument):
        analytic_reliability_single_link(0.0, 1.0)


def test_one_point_map_equals_estimate():
    area = ServiceArea(24.0, 24.0)
    grid = build_grid(area, 24.0)
    cfg = ResourceConfig()
    dep = Deployment.from_coords([[3.0, 5.0], [20.0, 22.0]])
    rmap = reliability_map(grid, dep, cfg, Requirements(), 3000, 17, ChannelParams())
    alpha, _ = estimate_reliability(grid.points[0], dep, cfg, Requirements(), 3000, make_rng(17, 0, 0),
                                    ChannelParams())
    assert rmap.alpha_hat[0] == alpha


def test_symmetric_corners_agree():
    grid = build_grid(ServiceArea(), 20.0)
    dep = Deployment.from_coords([[100.0, 100.0]])
    cfg = ResourceConfig(bandwidth_hz=5e6)
    req = Requirements(gamma_latency=1e-4)
    rmap = reliability_map(grid, dep, cfg, req, 20_000, 5, ChannelParams())
    corners = [0, grid.nx - 1, len(grid) - grid.nx, len(grid) - 1]
    a = rmap.alpha_hat[corners]
    se = rmap.stderr[corners].max()
    assert 0.05 < a.mean() < 0.999
    assert np.ptp(a) <= 4 * math.sqrt(2) * se


def test_seed_determinism():
    grid = build_grid(ServiceArea(), 40.0)
    dep = Deployment.from_coords([[30, 30], [170, 60]])
    cfg, req = ResourceConfig(bandwidth_hz=2e6), Requirements()
    a = reliability_map(grid, dep, cfg, req, 2000, 3)
    b = reliability_map(grid, dep, cfg, req, 2000, 3)
    c = reliability_map(grid, dep, cfg, req, 2000, 4)
    assert np.array_equal(a.alpha_hat, b.alpha_hat)
    assert not np.array_equal(a.alpha_hat, c.alpha_hat)
    se = np.sqrt(a.stderr ** 2 + c.stderr ** 2)
    assert np.all(np.abs(a.alpha_hat - c.alpha_hat) <= 5 * se + 1e-12)


def _fake_map(alpha):
    alpha = np.asarray(alpha, dtype=float)
    side = int(math.isqrt(alpha.size))
    grid = build_grid(ServiceArea(float(side), float(side)), 1.0)
    return ReliabilityMap(grid, alpha, binomial_stderr(alpha, 1000), 1000, Requirements(), ResourceConfig())


def test_coverage_counting():
    m = _fake_map(np.ones(16))
    assert reliability_coverage(m, 0.99999).eta == 1.0
    half = _fake_map(np.r_[np.full(8, 0.9999), np.full(8, 0.5)])
    cov = reliability_coverage(half, 0.999)
    assert cov.eta == 0.5 and cov.n_covered == 8 and cov.n_points == 16


@given(arrays(np.float64, 25, elements=st.floats(0, 1)), st.floats(0.01, 0.999), st.floats(0.0, 0.99))
def test_coverage_non_increasing_in_alpha(alpha, a1, frac):
    m = _fake_map(alpha)
    a2 = a1 + frac * (1 - a1)
    assert reliability_coverage(m, a2).eta <= reliability_coverage(m, a1).eta


def test_coverage_invariant_to_order():
    rng = np.random.default_rng(0)
    alpha = rng.random(36)
    perm = rng.permutation(36)
    assert reliability_coverage(_fake_map(alpha), 0.5).eta == reliability_coverage(_fake_map(alpha[perm]), 0.5).eta


def test_map_json_csv_round_trip(tmp_path):
    grid = build_grid(ServiceArea(), 50.0)
    dep = Deployment.from_coords([[30, 30], [170, 60]])
    m = reliability_map(grid, dep, ResourceConfig(), Requirements(), 500, 1)
    m.to_json(tmp_path / "m.json")
    back = ReliabilityMap.from_json(tmp_path / "m.json")
    assert np.array_equal(back.alpha_hat, m.alpha_hat) and back.requirements == m.requirements
    m.to_csv(tmp_path / "m.csv", log10_outage=True)
    rows = list(csv.DictReader(open(tmp_path / "m.csv")))
    assert list(rows[0]) == ["x", "y", "alpha_hat", "stderr", "covered", "log10_outage"]
    assert len(rows) == len(grid)


def test_undersampled_mask():
    m = _fake_map(np.r_[np.full(8, 0.5), np.ones(8)])
    assert m.undersampled(0.999).sum() == 8
    assert np.all(np.isfinite(m.log10_outage()))
