import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relcov.channel import ChannelParams
from relcov.config import Scenario
from relcov.dimensioning import (
    DimensioningRow,
    DimensioningTable,
    SweepSpec,
    critical_bandwidths,
    density_comparison,
    deployment_seed,
    min_bandwidth,
    run_sweep,
    trace_stream,
)
from relcov.errors import InvalidArgument, TargetInfeasible
from relcov.reliability import reliability_coverage, reliability_map
from relcov.scenario import Requirements, ResourceConfig, ServiceArea, build_grid, generate_bpp_deployment

FIG_CHANNEL = ChannelParams(fading="none", large_scale_mode="static-blockage", association="strongest")


def small_scenario(noise=True, channel=FIG_CHANNEL, n=4):
    return Scenario(area=ServiceArea(60.0, 60.0),
                    requirements=Requirements(alpha_star=0.99, eta_star=0.9),
                    resources=ResourceConfig(n_aps=n, noise_enabled=noise),
                    channel=channel)


@pytest.fixture(scope="module")
def sweep_table():
    spec = SweepSpec(bandwidths_hz=(2e6, 5e6, 10e6, 20e6, 50e6), densities=(2, 4),
                     alpha_stars=(0.9, 0.99, 0.999), n_deployments=3, n_trials=4000,
                     grid_spacing=10.0, master_seed=7, estimator="empirical")
    return run_sweep(spec, small_scenario())


@pytest.mark.parametrize("kw", [
    {"bandwidths_hz": ()}, {"bandwidths_hz": (0.0,)}, {"densities": (0,)},
    {"alpha_stars": (1.0,)}, {"n_deployments": 0}, {"n_trials": 0}, {"estimator": "bogus"},
])
def test_sweep_spec_validation(kw):
    base = {"bandwidths_hz": (1e6,), "densities": (3,), "alpha_stars": (0.99,)}
    with pytest.raises(InvalidArgument):
        SweepSpec(**{**base, **kw})


def test_degenerate_sweep_matches_single_map():
    scn = small_scenario()
    spec = SweepSpec(bandwidths_hz=(10e6,), densities=(4,), alpha_stars=(0.99,), n_deployments=1,
                     n_trials=4000, grid_spacing=10.0, master_seed=3, estimator="empirical")
    table = run_sweep(spec, scn)
    assert len(table) == 1
    dep = generate_bpp_deployment(scn.area, 4, deployment_seed(3, 4, 0))
    cfg = replace(scn.resources, bandwidth_hz=10e6)
    rmap = reliability_map(build_grid(scn.area, 10.0), dep, cfg, scn.requirements, 4000, 3,
                           scn.channel, stream_key=trace_stream(4, 0))
    assert table.rows[0].eta_mean == reliability_coverage(rmap, 0.99).eta
    assert table.rows[0].eta_stderr == 0.0


def test_sweep_monotone(sweep_table):
    for n in (2, 4):
        curves = [sweep_table.curve(n, a)[1] for a in (0.9, 0.99, 0.999)]
        for hi, lo in zip(curves, curves[1:]):
            assert np.all(lo <= hi)
    # common random numbers keep the per-deployment curves monotone in w
    for n in (2, 4):
        for a in (0.9, 0.99, 0.999):
            per = np.array([sweep_table.per_deployment[(w, n, a)] for w in (2e6, 5e6, 10e6, 20e6, 50e6)])
            assert np.all(np.diff(per, axis=0) >= 0)


def test_sweep_monotone_in_w_without_noise():
    spec = SweepSpec(bandwidths_hz=(1e6, 3e6, 10e6, 30e6), densities=(3,), alpha_stars=(0.99,),
                     n_deployments=2, n_trials=3000, grid_spacing=10.0, estimator="empirical")
    table = run_sweep(spec, small_scenario(noise=False))
    for k in range(2):
        per = [table.per_deployment[(w, 3, 0.99)][k] for w in spec.bandwidths_hz]
        assert np.all(np.diff(per) >= 0)


def test_table_round_trips(tmp_path, sweep_table):
    sweep_table.to_csv(tmp_path / "t.csv")
    back = DimensioningTable.from_csv(tmp_path / "t.csv")
    assert len(back) == len(sweep_table)
    r = sweep_table.rows[5]
    b = back.lookup(r.bandwidth_hz, r.n_aps, r.alpha_star)
    assert b.eta_mean == pytest.approx(r.eta_mean, rel=1e-9)
    with pytest.raises(KeyError):
        back.lookup(3e6, 2, 0.99)
    sweep_table.to_json(tmp_path / "t.json")


def test_sweep_reproducible_and_worker_independent():
    spec = SweepSpec(bandwidths_hz=(5e6, 20e6), densities=(3,), alpha_stars=(0.99,), n_deployments=2,
                     n_trials=2000, grid_spacing=15.0, master_seed=11)
    a = run_sweep(spec, small_scenario())
    b = run_sweep(spec, small_scenario(), workers=2)
    assert a.to_dict() == b.to_dict()


def test_min_bandwidth_edge_cases():
    scn = small_scenario()
    kw = dict(n_deployments=1, n_trials=2000, spacing=15.0, estimator="empirical")
    assert min_bandwidth(0.0, 0.99, 3, 1e6, 1e8, 0.05, scn, **kw) == 1e6
    with pytest.raises(TargetInfeasible) as info:
        min_bandwidth(1.0, 0.99, 3, 1e5, 2e5, 0.05, scn, **kw)
    assert 0.0 <= info.value.eta_at_upper < 1.0
    with pytest.raises(InvalidArgument):
        min_bandwidth(1.2, 0.99, 3, 1e6, 1e8, 0.05, scn, **kw)
    with pytest.raises(InvalidArgument):
        min_bandwidth(0.5, 0.99, 3, 1e8, 1e6, 0.05, scn, **kw)


def test_min_bandwidth_meets_target():
    scn = small_scenario(noise=False)
    crit = critical_bandwidths(scn, 3, 0.99, 1e5, 1e9, 0.01, n_deployments=2, n_trials=3000,
                               spacing=10.0, estimator="empirical")
    w = min_bandwidth(0.8, 0.99, 3, 1e5, 1e9, 0.01, scn, critical=crit)
    assert crit.eta(w) >= 0.8
    assert crit.eta(w / (1 + 0.01) ** 2) < 0.8


@settings(max_examples=8)
@given(st.floats(1e3, 1e5), st.floats(2e9, 1e10), st.sampled_from([0.3, 0.6, 0.9]))
def test_min_bandwidth_bracket_invariance(w_lo, w_hi, eta_star):
    scn = small_scenario(noise=False)
    kw = dict(n_deployments=1, n_trials=2000, spacing=15.0, estimator="empirical")
    ref = min_bandwidth(eta_star, 0.99, 3, 1e3, 1e10, 0.01, scn, **kw)
    assert 1e5 < ref < 2e9
    got = min_bandwidth(eta_star, 0.99, 3, w_lo, w_hi, 0.01, scn, **kw)
    assert abs(math.log(got / ref)) <= 2 * math.log1p(0.01)


def test_density_comparison_ordering():
    rows = []
    for n, etas in {5: [0.2, 0.5, 0.8], 10: [0.6, 0.95, 0.99], 15: [0.1, 0.2, 0.3]}.items():
        rows += [DimensioningRow(w, n, 0.999, e, 0.0) for w, e in zip((1e6, 1e7, 1e8), etas)]
    table = DimensioningTable(tuple(rows))
    out = density_comparison(table, 0.5)
    assert [d.n_aps for d in out] == [10, 5, 15]
    assert out[0].status == "at-or-below-range" and out[0].bandwidth_hz == 1e6
    assert out[1].bandwidth_hz == pytest.approx(1e7)
    assert out[2].status == "unattained" and out[2].bandwidth_hz is None
    mid = density_comparison(table, 0.65)[1]
    assert mid.n_aps == 5 and mid.bandwidth_hz == pytest.approx(10 ** 7.5)


def test_density_comparison_single_density(sweep_table):
    rows = tuple(r for r in sweep_table.rows if r.n_aps == 4)
    out = density_comparison(DimensioningTable(rows), 0.5, alpha_star=0.99)
    assert len(out) == 1 and out[0].n_aps == 4
    with pytest.raises(InvalidArgument):
        density_comparison(sweep_table, 0.5)


@pytest.mark.parametrize("estimator", ["evt", "empirical"])
def test_noise_free_closed_form_matches_bisection(estimator):
    from relcov.dimensioning import CriticalBandwidth
    from relcov.montecarlo import run_points

    scn = small_scenario(noise=False)
    grid = build_grid(scn.area, 15.0)
    dep = generate_bpp_deployment(scn.area, 3, 5)
    red = CriticalBandwidth(scn, 0.999, 1e5, 1e10, 0.005, estimator)

    class Bisect(CriticalBandwidth):
        def closed_form(self, trace):
            return None

    ref = Bisect(scn, 0.999, 1e5, 1e10, 0.005, estimator)
    a = np.array(run_points(grid.coords, dep, scn.resources, scn.channel, 3000, 2, red))
    b = np.array(run_points(grid.coords, dep, scn.resources, scn.channel, 3000, 2, ref))
    assert np.array_equal(np.isinf(a), np.isinf(b))
    fin = np.isfinite(a)
    assert np.all(a[fin] <= b[fin] * (1 + 1e-12))
    assert np.all(b[fin] <= a[fin] * 1.005 * (1 + 1e-12))
