import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from relcov.channel import (
    ChannelParams,
    LinkGeometry,
    breakpoint_distance,
    clamp_geometry,
    los_probability,
    pathloss_db,
    pathloss_los_db,
    pathloss_nlos_db,
    sample_fading_gain,
    sample_large_scale,
)
from relcov.errors import InvalidArgument

from oracles import (
    BREAKPOINT_M,
    LOS_PROB_36M,
    LOS_PROB_100M,
    PL_LOS_D3D_50M,
    PL_LOS_FAR_100M,
    PL_NLOS_100M,
)

FC = 1.5e9
P = ChannelParams()


def test_los_probability_values():
    assert los_probability(10.0) == 1.0
    assert los_probability(18.0) == pytest.approx(1.0)
    assert los_probability(36.0) == pytest.approx(LOS_PROB_36M, rel=1e-14)
    assert los_probability(100.0) == pytest.approx(LOS_PROB_100M, rel=1e-14)
    assert los_probability(1e6) < 1e-4


@given(st.floats(18.0, 5000.0), st.floats(0.0, 500.0))
def test_los_probability_non_increasing(d, step):
    assert los_probability(d + step) <= los_probability(d) + 1e-15


def test_breakpoint():
    assert breakpoint_distance(10.0, 1.5, FC) == pytest.approx(BREAKPOINT_M)


def test_pathloss_los_near_slope():
    assert pathloss_los_db(50.0, 50.0, 10.0, 1.5, FC) == pytest.approx(PL_LOS_D3D_50M, abs=1e-10)


def test_pathloss_nlos_example():
    assert pathloss_los_db(100.0, 100.0, 10.0, 1.5, FC) == pytest.approx(PL_LOS_FAR_100M, abs=1e-10)
    assert pathloss_nlos_db(100.0, 100.0, 10.0, 1.5, FC) == pytest.approx(PL_NLOS_100M, abs=1e-10)


def test_los_continuous_at_breakpoint():
    dbp = breakpoint_distance(10.0, 1.5, FC)
    eps = 1e-9
    lo = pathloss_los_db(dbp, math.hypot(dbp, 8.5), 10.0, 1.5, FC)
    hi = pathloss_los_db(dbp + eps, math.hypot(dbp + eps, 8.5), 10.0, 1.5, FC)
    assert abs(hi - lo) < 1e-6


@given(st.floats(10.0, 2000.0), st.booleans())
def test_pathloss_monotone_and_nlos_above_los(d, los):
    g1 = LinkGeometry.from_d2d(d)
    g2 = LinkGeometry.from_d2d(d * 1.5)
    assert pathloss_db(g2, los, FC) > pathloss_db(g1, los, FC)
    assert pathloss_db(g1, False, FC) >= pathloss_db(g1, True, FC)
    assert pathloss_db(g1, los, FC) > 0


def test_clamp_below_ten_meters():
    d2d, d3d = clamp_geometry(np.array([0.0, 5.0, 20.0]), 10.0, 1.5)
    assert d2d.tolist() == [10.0, 10.0, 20.0]
    assert d3d[0] == pytest.approx(math.hypot(10.0, 8.5))
    near = LinkGeometry.from_d2d(2.0)
    assert pathloss_db(near, True, FC) == pathloss_db(LinkGeometry.from_d2d(10.0), True, FC)


def test_geometry_invariant():
    g = LinkGeometry.from_d2d(30.0, 10.0, 1.5)
    assert g.d3d ** 2 == pytest.approx(g.d2d ** 2 + 8.5 ** 2)


def test_large_scale_los_fraction_and_shadowing():
    rng = np.random.default_rng(0)
    geom = LinkGeometry.from_d2d(36.0)
    states = [sample_large_scale(geom, FC, P, rng) for _ in range(200_000)]
    los = np.array([s.is_los for s in states])
    sh = np.array([s.shadowing_db for s in states])
    # 200k draws: stderr 0.001, tolerance of 3 stderr
    assert abs(los.mean() - LOS_PROB_36M) < 0.0032
    assert abs(sh.mean()) < 0.03
    assert np.std(sh[~los]) == pytest.approx(4.0, abs=0.04)
    assert np.std(sh[los]) == pytest.approx(3.0, abs=0.03)


def test_rayleigh_unit_mean_and_small_gain_tail():
    rng = np.random.default_rng(1)
    g = sample_fading_gain(False, P, rng, size=10_000_000)
    assert abs(g.mean() - 1.0) < 0.0015
    frac = np.mean(g < 1e-3)
    expected = -math.expm1(-1e-3)
    assert abs(frac - expected) < 3 * math.sqrt(expected / 1e7)


def test_rician_unit_mean():
    rng = np.random.default_rng(2)
    g = sample_fading_gain(True, P, rng, size=1_000_000)
    assert np.all(g > 0)
    assert abs(g.mean() - 1.0) < 0.005
    # K = 10 dB: var of the normalized power is (1 + 2K) / (1 + K)^2
    k = 10.0
    assert np.var(g) == pytest.approx((1 + 2 * k) / (1 + k) ** 2, rel=0.02)


def test_mixed_fading_and_none():
    rng = np.random.default_rng(3)
    los = np.arange(400_000) % 2 == 0
    g = sample_fading_gain(los, P, rng, size=los.shape)
    assert abs(g[los].mean() - 1) < 0.01 and abs(g[~los].mean() - 1) < 0.01
    assert sample_fading_gain(True, ChannelParams(fading="none"), rng) == 1.0


@pytest.mark.parametrize("kwargs", [
    {"shadow_sigma_los_db": -1.0}, {"los_decay_m": 0.0}, {"fading": "nakagami"},
    {"large_scale_mode": "frozen"}, {"association": "random"},
    {"association": "strongest", "large_scale_mode": "ergodic"},
])
def test_params_validation(kwargs):
    with pytest.raises(InvalidArgument):
        ChannelParams(**kwargs)
