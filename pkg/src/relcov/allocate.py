"""Rate selection under an outage target, with conservative selection for position uncertainty."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import InvalidArgument
from .evt import (
    INTERPOLATED,
    MEASURED,
    GpdFit,
    InterpSpec,
    MeasurementSet,
    OutageMap,
    admissible_threshold,
    coverage_from_outage,
    fit_tail,
    interpolate,
)
from .errors import FitFailed, InsufficientData, ResolutionLimit
from .reliability import CoverageResult
from .scenario import EvaluationGrid, Location, Requirements, ResourceConfig, ServiceArea, build_grid
from .sinr import sinr_threshold

_REL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class RateMap:
    grid: EvaluationGrid
    rate_bps: np.ndarray
    epsilon: float
    bandwidth_hz: float
    provenance: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(self.rate_bps < 0):
            raise InvalidArgument("rates must be non-negative")

    def __len__(self):
        return self.rate_bps.shape[0]

    def to_csv(self, path) -> None:
        prov = self.provenance if self.provenance is not None else np.full(len(self), MEASURED)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "rate_bps", "provenance"])
            for x, y, r, p in zip(self.grid.xs, self.grid.ys, self.rate_bps, prov):
                w.writerow([f"{x:.6g}", f"{y:.6g}", f"{r:.10g}", p])

    def to_dict(self) -> dict:
        return {
            "kind": "rate_map",
            "area": asdict(self.grid.area),
            "spacing": self.grid.spacing,
            "epsilon": self.epsilon,
            "bandwidth_hz": self.bandwidth_hz,
            "rate_bps": self.rate_bps.tolist(),
            "provenance": None if self.provenance is None else [str(p) for p in self.provenance],
            "meta": self.meta,
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def from_json(cls, path) -> "RateMap":
        with open(path) as fh:
            d = json.load(fh)
        grid = build_grid(ServiceArea(**d["area"]), d["spacing"])
        prov = None if d.get("provenance") is None else np.asarray(d["provenance"])
        return cls(grid, np.asarray(d["rate_bps"], dtype=float), float(d["epsilon"]),
                   float(d["bandwidth_hz"]), prov, d.get("meta", {}))


@dataclass(frozen=True)
class LocalizationModel:
    error_radius: float = 0.0  # meters, worst-case disk

    def __post_init__(self):
        if not self.error_radius >= 0:
            raise InvalidArgument("error_radius must be non-negative")


@dataclass(frozen=True)
class Verdict:
    coverage: CoverageResult
    eta_star: float
    passed: bool
    parameters: dict

    def to_dict(self) -> dict:
        return {"eta": self.coverage.eta, "eta_star": self.eta_star, "pass": self.passed,
                "n_points": self.coverage.n_points, "n_covered": self.coverage.n_covered,
                "parameters": self.parameters}


def rate_from_sinr(sinr_star, bandwidth_hz: float, rate_levels=None):
    """Shannon rate of the admissible threshold, rounded down to ``rate_levels`` if given."""
    rate = bandwidth_hz * np.log2(1.0 + np.maximum(np.asarray(sinr_star, dtype=float), 0.0))
    if rate_levels is not None:
        levels = np.sort(np.asarray(rate_levels, dtype=float))
        pos = np.searchsorted(levels, rate * (1 + _REL_TOL), side="right") - 1
        rate = np.where(pos >= 0, levels[np.maximum(pos, 0)], 0.0)
    return float(rate) if np.ndim(rate) == 0 else rate


def max_rate_for_outage(source, epsilon: float, bandwidth_hz: float, samples=None,
                        rate_levels=None) -> float:
    """Largest rate whose estimated outage stays within ``epsilon``.

    ``source`` is a :class:`GpdFit` (pass ``samples`` too when ``epsilon`` may fall in
    the bulk) or a plain sample array, which uses order statistics only.
    """
    if not bandwidth_hz > 0:
        raise InvalidArgument("bandwidth must be positive")
    if isinstance(source, GpdFit):
        t_star = admissible_threshold(source, epsilon, samples)
    else:
        if not 0.0 < epsilon < 1.0:
            raise InvalidArgument("epsilon must lie in (0, 1)")
        t_star = admissible_threshold(None, epsilon, source)
    return rate_from_sinr(t_star, bandwidth_hz, rate_levels)


def rate_map_from_thresholds(grid: EvaluationGrid, locations, sinr_star, epsilon: float,
                             bandwidth_hz: float, interp: InterpSpec = InterpSpec(),
                             rate_levels=None, meta: dict | None = None) -> RateMap:
    """Place per-location admissible thresholds on the grid and fill the rest by interpolation.

    Interpolation works on the threshold in dB; rates are derived afterwards, so the
    map stays consistent with the outage map at measured points.
    """
    locs = np.asarray(locations, dtype=float).reshape(-1, 2)
    star = np.asarray(sinr_star, dtype=float)
    ok = np.isfinite(star)
    if not ok.any():
        raise InsufficientData("no location produced an admissible threshold", 1)
    n = len(grid)
    t_grid = np.empty(n)
    prov = np.full(n, INTERPOLATED, dtype=object)
    dist, gidx = cKDTree(grid.coords).query(locs[ok])
    on_grid = dist <= 1e-6 * grid.spacing
    t_grid[gidx[on_grid]] = star[ok][on_grid]
    prov[gidx[on_grid]] = MEASURED
    rest = np.flatnonzero(prov != MEASURED)
    if rest.size:
        floor_db = -150.0
        with np.errstate(divide="ignore"):
            db = np.maximum(10.0 * np.log10(star[ok]), floor_db)
        est = interpolate(locs[ok], db, grid.coords[rest],
                          InterpSpec(interp.method, interp.power, interp.k, floor_db))
        t_grid[rest] = np.where(est <= floor_db, 0.0, 10.0 ** (est / 10.0))
    rates = rate_from_sinr(t_grid, bandwidth_hz, rate_levels)
    return RateMap(grid, np.asarray(rates, dtype=float), float(epsilon), float(bandwidth_hz),
                   prov.astype(str), dict(meta or {}))


def build_rate_map(measurements: MeasurementSet, grid: EvaluationGrid, epsilon: float,
                   bandwidth_hz: float, interp: InterpSpec = InterpSpec(),
                   tail_fraction: float = 0.05, domain: str = "db", rate_levels=None) -> RateMap:
    stars = []
    failed = 0
    for s in measurements.samples:
        try:
            stars.append(admissible_threshold(fit_tail(s, tail_fraction, domain), epsilon, s))
        except (InsufficientData, FitFailed, ResolutionLimit):
            stars.append(math.nan)
            failed += 1
    meta = {"domain": domain, "tail_fraction": tail_fraction, "failed_fits": failed,
            "interpolator": interp.method}
    return rate_map_from_thresholds(grid, measurements.locations, stars, epsilon, bandwidth_hz,
                                    interp, rate_levels, meta)


def conservative_rate(reported_loc: Location, loc_model: LocalizationModel, rate_map: RateMap) -> float:
    """Minimum rate over grid points within the error disk (at least the nearest point)."""
    coords = rate_map.grid.coords
    d = np.hypot(coords[:, 0] - reported_loc.x, coords[:, 1] - reported_loc.y)
    inside = d <= loc_model.error_radius
    inside[int(np.argmin(d))] = True
    return float(np.min(rate_map.rate_bps[inside]))


def _close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=_REL_TOL)


def check_requirements(map_, requirements: Requirements, config: ResourceConfig | None = None,
                       epsilon: float | None = None) -> Verdict:
    """Coverage of a rate or outage map against ``requirements`` and the verdict eta >= eta_star."""
    alpha_star = requirements.alpha_star
    params = {"alpha_star": alpha_star, "eta_star": requirements.eta_star,
              "gamma": requirements.gamma_latency, "payload_bits": requirements.payload_bits}
    if isinstance(map_, RateMap):
        eps = requirements.outage_target if epsilon is None else float(epsilon)
        if not _close(map_.epsilon, eps):
            raise InvalidArgument(f"rate map built for outage {map_.epsilon:g}, requirement is {eps:g}")
        if config is not None and not _close(map_.bandwidth_hz, config.bandwidth_hz):
            raise InvalidArgument("rate map bandwidth differs from the configured bandwidth")
        covered = map_.rate_bps >= requirements.required_rate * (1 - _REL_TOL)
        cov = CoverageResult(float(np.count_nonzero(covered)) / covered.size, alpha_star,
                             requirements.gamma_latency, covered, config)
        params.update(bandwidth_hz=map_.bandwidth_hz, epsilon=map_.epsilon)
    elif isinstance(map_, OutageMap):
        bw = map_.meta.get("bandwidth_hz")
        if config is not None:
            if bw is not None and not _close(float(bw), config.bandwidth_hz):
                raise InvalidArgument("outage map bandwidth differs from the configured bandwidth")
            bw = config.bandwidth_hz
        if bw is not None:
            t = sinr_threshold(requirements.payload_bits, float(bw), requirements.gamma_latency)
            if not _close(t, map_.sinr_t):
                raise InvalidArgument("outage map threshold does not match payload, bandwidth and deadline")
        cov = coverage_from_outage(map_, alpha_star, requirements.gamma_latency)
        params.update(bandwidth_hz=bw, sinr_threshold=map_.sinr_t)
    else:
        raise InvalidArgument(f"cannot check requirements on {type(map_).__name__}")
    return Verdict(cov, requirements.eta_star, cov.eta >= requirements.eta_star, params)
