"""Bandwidth and density sweeps of reliability coverage, and minimal-bandwidth search.

Seeds are keyed to work items: deployment ``k`` of density ``n`` is drawn from
``derive_seed(master, 1, n, k)`` and its per-point traces from streams
``(master, 2, n, k, point)``. Every bandwidth of a sweep therefore sees the same
traces (common random numbers), which keeps the coverage curves monotone.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import FitFailed, InsufficientData, InvalidArgument, ResolutionLimit, TargetInfeasible
from .evt import TailProbe, admissible_threshold, empirical_outage, fit_tail, tail_outage
from .montecarlo import run_points
from .scenario import build_grid, derive_seed, generate_bpp_deployment
from .sinr import sinr_threshold

ESTIMATORS = ("evt", "empirical")


def deployment_seed(master_seed: int, n: int, k: int) -> int:
    return derive_seed(master_seed, 1, n, k)


def trace_stream(n: int, k: int) -> tuple[int, int, int]:
    return (2, int(n), int(k))


@dataclass(frozen=True)
class SweepSpec:
    bandwidths_hz: tuple
    densities: tuple
    alpha_stars: tuple
    n_deployments: int = 20
    n_trials: int = 20_000
    grid_spacing: float = 4.0
    master_seed: int = 0
    estimator: str = "evt"
    tail_fraction: float = 0.05
    domain: str = "db"

    def __post_init__(self):
        for name in ("bandwidths_hz", "densities", "alpha_stars"):
            vals = tuple(getattr(self, name))
            if not vals:
                raise InvalidArgument(f"{name} must not be empty")
            object.__setattr__(self, name, vals)
        if any(not w > 0 for w in self.bandwidths_hz):
            raise InvalidArgument("bandwidths must be positive")
        if any(int(n) < 1 for n in self.densities):
            raise InvalidArgument("densities must be positive AP counts")
        if any(not 0 < a < 1 for a in self.alpha_stars):
            raise InvalidArgument("alpha_star values must lie in (0, 1)")
        if self.n_deployments < 1:
            raise InvalidArgument("n_deployments must be at least 1")
        if self.n_trials < 1:
            raise InvalidArgument("n_trials must be at least 1")
        if self.estimator not in ESTIMATORS:
            raise InvalidArgument(f"estimator must be one of {ESTIMATORS}")


@dataclass(frozen=True)
class DimensioningRow:
    bandwidth_hz: float
    n_aps: int
    alpha_star: float
    eta_mean: float
    eta_stderr: float


@dataclass(frozen=True, eq=False)
class DimensioningTable:
    rows: tuple
    per_deployment: dict = field(default_factory=dict)  # (w, n, alpha) -> etas

    def __len__(self):
        return len(self.rows)

    def lookup(self, bandwidth_hz: float, n_aps: int, alpha_star: float) -> DimensioningRow:
        for r in self.rows:
            if (math.isclose(r.bandwidth_hz, bandwidth_hz) and r.n_aps == n_aps
                    and math.isclose(r.alpha_star, alpha_star)):
                return r
        raise KeyError((bandwidth_hz, n_aps, alpha_star))

    def curve(self, n_aps: int, alpha_star: float) -> tuple[np.ndarray, np.ndarray]:
        """Bandwidths (ascending) and mean coverage for one density and target."""
        sel = sorted((r.bandwidth_hz, r.eta_mean) for r in self.rows
                     if r.n_aps == n_aps and math.isclose(r.alpha_star, alpha_star))
        if not sel:
            raise KeyError((n_aps, alpha_star))
        w, eta = zip(*sel)
        return np.array(w), np.array(eta)

    @property
    def densities(self) -> list[int]:
        return sorted({r.n_aps for r in self.rows})

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bandwidth_hz", "n_aps", "alpha_star", "eta_mean", "eta_stderr"])
            for r in self.rows:
                w.writerow([f"{r.bandwidth_hz:.10g}", r.n_aps, f"{r.alpha_star:.10g}",
                            f"{r.eta_mean:.10g}", f"{r.eta_stderr:.6g}"])

    @classmethod
    def from_csv(cls, path) -> "DimensioningTable":
        with open(path, newline="") as fh:
            rows = [DimensioningRow(float(r["bandwidth_hz"]), int(r["n_aps"]), float(r["alpha_star"]),
                                    float(r["eta_mean"]), float(r["eta_stderr"]))
                    for r in csv.DictReader(fh)]
        return cls(tuple(rows))

    def to_dict(self) -> dict:
        return {"rows": [asdict(r) for r in self.rows],
                "per_deployment": [{"bandwidth_hz": k[0], "n_aps": k[1], "alpha_star": k[2],
                                    "eta": list(v)} for k, v in self.per_deployment.items()]}

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)


def _point_outage(sinr, t, estimator, tail_fraction, domain) -> float:
    if estimator == "empirical":
        return empirical_outage(sinr, t)
    try:
        return tail_outage(fit_tail(sinr, tail_fraction, domain), t, sinr)
    except (InsufficientData, FitFailed):
        return empirical_outage(sinr, t)


def _eta_stats(etas) -> tuple[float, float]:
    etas = np.asarray(etas, dtype=float)
    se = float(np.std(etas, ddof=1) / math.sqrt(etas.size)) if etas.size > 1 else 0.0
    return float(np.mean(etas)), se


def deployment_outages(scenario, n: int, k: int, bandwidths, n_trials: int, spacing: float,
                       master_seed: int, estimator: str = "evt", tail_fraction: float = 0.05,
                       domain: str = "db", workers: int = 1) -> np.ndarray:
    """Per-point outage at each bandwidth for deployment ``k`` of density ``n``; shape (points, w)."""
    grid = build_grid(scenario.area, spacing)
    dep = generate_bpp_deployment(scenario.area, n, deployment_seed(master_seed, n, k))
    req = scenario.requirements
    config = replace(scenario.resources, n_aps=n)
    noise = [config.noise_power_w(w) for w in bandwidths]
    ts = [[sinr_threshold(req.payload_bits, w, req.gamma_latency)] for w in bandwidths]
    probe = TailProbe(noise, ts, (), tail_fraction, domain)
    res = run_points(grid.coords, dep, config, scenario.channel, n_trials, master_seed, probe,
                     stream_key=trace_stream(n, k), workers=workers)
    out = np.empty((len(grid), len(bandwidths)))
    for i, summaries in enumerate(res):
        for j, s in enumerate(summaries):
            v = s.outage(estimator)[0]
            out[i, j] = s.empirical[0] if math.isnan(v) else v
    return out


def run_sweep(spec: SweepSpec, scenario, workers: int = 1, progress=None) -> DimensioningTable:
    """Mean coverage over ``spec.n_deployments`` BPP deployments for every (w, n, alpha) cell."""
    per = {}
    for n in spec.densities:
        etas = np.empty((spec.n_deployments, len(spec.bandwidths_hz), len(spec.alpha_stars)))
        for k in range(spec.n_deployments):
            out = deployment_outages(scenario, int(n), k, spec.bandwidths_hz, spec.n_trials,
                                     spec.grid_spacing, spec.master_seed, spec.estimator,
                                     spec.tail_fraction, spec.domain, workers)
            for a, alpha in enumerate(spec.alpha_stars):
                etas[k, :, a] = np.mean(out <= 1.0 - alpha, axis=0)
            if progress is not None:
                progress(n, k)
        for j, w in enumerate(spec.bandwidths_hz):
            for a, alpha in enumerate(spec.alpha_stars):
                per[(float(w), int(n), float(alpha))] = tuple(etas[:, j, a].tolist())
    rows = []
    for (w, n, alpha), e in per.items():
        m, se = _eta_stats(e)
        rows.append(DimensioningRow(w, n, alpha, m, se))
    return DimensioningTable(tuple(rows), per)


class CriticalBandwidth:
    """Reducer: smallest bandwidth in ``[w_lo, w_hi]`` at which a point meets ``alpha_star``.

    Bisects in log-bandwidth on the point's own trace; returns ``w_lo`` when the point
    is covered there already and ``inf`` when it is not covered at ``w_hi``. Without
    noise the answer follows from the admissible SINR threshold directly.
    """

    def __init__(self, scenario, alpha_star, w_lo, w_hi, rel_tol, estimator="evt",
                 tail_fraction=0.05, domain="db"):
        self.req = scenario.requirements
        self.config = scenario.resources
        self.eps = 1.0 - alpha_star
        self.w_lo, self.w_hi, self.rel_tol = float(w_lo), float(w_hi), float(rel_tol)
        self.estimator, self.tail_fraction, self.domain = estimator, tail_fraction, domain

    def covered(self, trace, w) -> bool:
        sinr = trace.sinr(self.config.noise_power_w(w))
        t = sinr_threshold(self.req.payload_bits, w, self.req.gamma_latency)
        return _point_outage(sinr, t, self.estimator, self.tail_fraction, self.domain) <= self.eps

    def closed_form(self, trace) -> float | None:
        """Noise-free case: SINR does not depend on w, so invert the tail once.

        Returns None when the target is beyond the resolvable tail; the caller then bisects.
        """
        sinr = trace.sinr(0.0)
        fit = None
        if self.estimator == "evt":
            try:
                fit = fit_tail(sinr, self.tail_fraction, self.domain)
            except (InsufficientData, FitFailed):
                fit = None
        try:
            t_star = admissible_threshold(fit, self.eps, sinr)
        except ResolutionLimit:
            return None
        if not t_star > 0:
            return math.inf
        w = self.req.payload_bits * math.log(2.0) / (self.req.gamma_latency * math.log1p(t_star))
        if w <= self.w_lo:
            return self.w_lo
        return w if w <= self.w_hi else math.inf

    def __call__(self, trace) -> float:
        if self.config.noise_power_w(1.0) == 0.0:
            w = self.closed_form(trace)
            if w is not None:
                return w
        if self.covered(trace, self.w_lo):
            return self.w_lo
        if not self.covered(trace, self.w_hi):
            return math.inf
        lo, hi = self.w_lo, self.w_hi
        while hi - lo > self.rel_tol * lo:
            mid = math.sqrt(lo * hi)
            if self.covered(trace, mid):
                hi = mid
            else:
                lo = mid
        return hi


@dataclass(frozen=True, eq=False)
class CriticalBandwidths:
    """Per-point critical bandwidths of every deployment; coverage at ``w`` is their CDF."""

    values: tuple  # one array per deployment
    w_lo: float
    w_hi: float

    def eta(self, w: float) -> float:
        return float(np.mean([np.mean(v <= w) for v in self.values]))

    def eta_per_deployment(self, w: float) -> np.ndarray:
        return np.array([np.mean(v <= w) for v in self.values])

    def eta_curve(self, ws) -> np.ndarray:
        """Coverage at each bandwidth in ``ws``; same arithmetic as :meth:`eta`."""
        ws = np.asarray(ws, dtype=float)
        per = [np.searchsorted(np.sort(v), ws, side="right") / v.size for v in self.values]
        return np.mean(per, axis=0)


def critical_bandwidths(scenario, n: int, alpha_star: float, w_lo: float, w_hi: float,
                        rel_tol: float = 0.02, n_deployments: int = 10, n_trials: int = 20_000,
                        spacing: float = 4.0, master_seed: int = 0, estimator: str = "evt",
                        tail_fraction: float = 0.05, domain: str = "db",
                        workers: int = 1) -> CriticalBandwidths:
    if not 0 < w_lo < w_hi:
        raise InvalidArgument("need 0 < w_lo < w_hi")
    if not rel_tol > 0:
        raise InvalidArgument("rel_tol must be positive")
    grid = build_grid(scenario.area, spacing)
    config = replace(scenario.resources, n_aps=n)
    scn = replace(scenario, resources=config)
    reducer = CriticalBandwidth(scn, alpha_star, w_lo, w_hi, rel_tol, estimator, tail_fraction, domain)
    vals = []
    for k in range(n_deployments):
        dep = generate_bpp_deployment(scenario.area, n, deployment_seed(master_seed, n, k))
        res = run_points(grid.coords, dep, config, scenario.channel, n_trials, master_seed, reducer,
                         stream_key=trace_stream(n, k), workers=workers)
        vals.append(np.asarray(res, dtype=float))
    return CriticalBandwidths(tuple(vals), float(w_lo), float(w_hi))


def min_bandwidth(eta_star: float, alpha_star: float, n: int, w_lo: float, w_hi: float,
                  rel_tol: float, scenario, n_deployments: int = 10, n_trials: int = 20_000,
                  spacing: float = 4.0, master_seed: int = 0, estimator: str = "evt",
                  tail_fraction: float = 0.05, domain: str = "db", workers: int = 1,
                  critical: CriticalBandwidths | None = None) -> float:
    """Smallest bandwidth whose mean coverage reaches ``eta_star``, to within ``rel_tol``.

    With common random numbers the coverage at ``w`` is the share of points whose
    own critical bandwidth is at most ``w``, so bisecting the aggregate curve reduces
    to one bisection per point followed by an exact search over the results.
    """
    if not 0.0 <= eta_star <= 1.0:
        raise InvalidArgument("eta_star must lie in [0, 1]")
    if eta_star == 0.0:
        return float(w_lo)
    if critical is None:
        critical = critical_bandwidths(scenario, n, alpha_star, w_lo, w_hi, rel_tol, n_deployments,
                                       n_trials, spacing, master_seed, estimator, tail_fraction,
                                       domain, workers)
    eta_hi = critical.eta(w_hi)
    if eta_hi < eta_star:
        raise TargetInfeasible(f"coverage {eta_hi:.4f} at {w_hi:g} Hz is below {eta_star:g}", eta_hi)
    if critical.eta(w_lo) >= eta_star:
        return float(w_lo)
    cands = np.unique(np.concatenate(critical.values))
    cands = cands[np.isfinite(cands)]
    etas = critical.eta_curve(cands)
    return float(cands[np.flatnonzero(etas >= eta_star)[0]])


@dataclass(frozen=True)
class DensityDemand:
    n_aps: int
    bandwidth_hz: float | None
    status: str  # interpolated | at-or-below-range | unattained


def density_comparison(table: DimensioningTable, eta_probe: float,
                       alpha_star: float | None = None) -> list[DensityDemand]:
    """Bandwidth reaching ``eta_probe`` per density, ordered by bandwidth demand.

    Linear interpolation in log-bandwidth between the first swept bandwidth that attains
    the probe and its predecessor; unattained densities sort last.
    """
    alphas = sorted({r.alpha_star for r in table.rows})
    if alpha_star is None:
        if len(alphas) != 1:
            raise InvalidArgument("table holds several alpha_star values; choose one")
        alpha_star = alphas[0]
    out = []
    for n in table.densities:
        w, eta = table.curve(n, alpha_star)
        hit = np.flatnonzero(eta >= eta_probe)
        if hit.size == 0:
            out.append(DensityDemand(n, None, "unattained"))
            continue
        i = int(hit[0])
        if i == 0:
            out.append(DensityDemand(n, float(w[0]), "at-or-below-range"))
            continue
        frac = (eta_probe - eta[i - 1]) / (eta[i] - eta[i - 1])
        lw = math.log(w[i - 1]) + frac * (math.log(w[i]) - math.log(w[i - 1]))
        out.append(DensityDemand(n, math.exp(lw), "interpolated"))
    return sorted(out, key=lambda d: (d.bandwidth_hz is None, d.bandwidth_hz or 0.0, d.n_aps))
