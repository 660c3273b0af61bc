"""Per-location link reliability by Monte Carlo and area-level reliability coverage."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .channel import ChannelParams
from .errors import InvalidArgument
from .montecarlo import SuccessCounter, run_points
from .scenario import (
    Deployment,
    EvaluationGrid,
    Location,
    Requirements,
    ResourceConfig,
    ServiceArea,
    build_grid,
)
from .sinr import link_budget, simulate_trace, sinr_threshold


@dataclass(frozen=True, eq=False)
class ReliabilityMap:
    grid: EvaluationGrid
    alpha_hat: np.ndarray
    stderr: np.ndarray
    n_trials: int
    requirements: Requirements
    config: ResourceConfig
    params: ChannelParams = field(default_factory=ChannelParams)

    def __len__(self):
        return self.alpha_hat.shape[0]

    @property
    def outage(self) -> np.ndarray:
        return 1.0 - self.alpha_hat

    def log10_outage(self, floor: float | None = None) -> np.ndarray:
        """log10 of the outage; zero-failure points are floored at half a trial."""
        floor = 0.5 / self.n_trials if floor is None else floor
        return np.log10(np.maximum(self.outage, floor))

    def undersampled(self, alpha_star: float) -> np.ndarray:
        """Mask of points whose standard error exceeds half the outage target."""
        return self.stderr > 0.5 * (1.0 - alpha_star)

    def to_dict(self) -> dict:
        return {
            "kind": "reliability_map",
            "n_trials": self.n_trials,
            "area": asdict(self.grid.area),
            "spacing": self.grid.spacing,
            "requirements": asdict(self.requirements),
            "config": asdict(self.config),
            "channel": asdict(self.params),
            "x": self.grid.xs.tolist(),
            "y": self.grid.ys.tolist(),
            "alpha_hat": self.alpha_hat.tolist(),
            "stderr": self.stderr.tolist(),
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def from_json(cls, path) -> "ReliabilityMap":
        with open(path) as fh:
            d = json.load(fh)
        grid = build_grid(ServiceArea(**d["area"]), d["spacing"])
        return cls(grid, np.asarray(d["alpha_hat"]), np.asarray(d["stderr"]), int(d["n_trials"]),
                   Requirements(**d["requirements"]), ResourceConfig(**d["config"]),
                   ChannelParams(**d["channel"]))

    def to_csv(self, path, alpha_star: float | None = None, log10_outage: bool = False) -> None:
        alpha_star = self.requirements.alpha_star if alpha_star is None else alpha_star
        covered = self.alpha_hat >= alpha_star
        header = ["x", "y", "alpha_hat", "stderr", "covered"]
        if log10_outage:
            header.append("log10_outage")
            lo = self.log10_outage()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for i in range(len(self)):
                row = [f"{self.grid.xs[i]:.6g}", f"{self.grid.ys[i]:.6g}", f"{self.alpha_hat[i]:.10g}",
                       f"{self.stderr[i]:.6g}", int(covered[i])]
                if log10_outage:
                    row.append(f"{lo[i]:.6g}")
                w.writerow(row)


@dataclass(frozen=True, eq=False)
class CoverageResult:
    eta: float
    alpha_star: float
    gamma: float
    covered_mask: np.ndarray
    config: ResourceConfig | None = None

    @property
    def n_points(self) -> int:
        return int(self.covered_mask.shape[0])

    @property
    def n_covered(self) -> int:
        return int(np.count_nonzero(self.covered_mask))


def binomial_stderr(p, n):
    p = np.asarray(p, dtype=float)
    return np.sqrt(p * (1.0 - p) / n)


def _threshold(config: ResourceConfig, requirements: Requirements) -> float:
    return sinr_threshold(requirements.payload_bits, config.bandwidth_hz, requirements.gamma_latency)


def estimate_reliability(loc: Location, deployment: Deployment, config: ResourceConfig,
                         requirements: Requirements, n_trials: int, rng: np.random.Generator,
                         params: ChannelParams = ChannelParams()) -> tuple[float, float]:
    """Fraction of trials with SINR at or above the latency threshold, and its standard error."""
    if n_trials < 1:
        raise InvalidArgument("n_trials must be at least 1")
    budget = link_budget([[loc.x, loc.y]], deployment, config, params)
    trace = simulate_trace(budget, 0, params, n_trials, rng)
    t = _threshold(config, requirements)
    ok = SuccessCounter([t], config.noise_power_w())(trace)[0]
    alpha = ok / n_trials
    return float(alpha), float(binomial_stderr(alpha, n_trials))


def reliability_map(grid: EvaluationGrid, deployment: Deployment, config: ResourceConfig,
                    requirements: Requirements, n_trials: int, master_seed: int,
                    params: ChannelParams = ChannelParams(), workers: int = 1,
                    stream_key=(0,)) -> ReliabilityMap:
    if len(grid) == 0:
        raise InvalidArgument("empty evaluation grid")
    if n_trials < 1:
        raise InvalidArgument("n_trials must be at least 1")
    t = _threshold(config, requirements)
    counts = run_points(grid.coords, deployment, config, params, n_trials, master_seed,
                        SuccessCounter([t], config.noise_power_w()), stream_key=stream_key,
                        workers=workers)
    alpha = np.array([c[0] for c in counts], dtype=float) / n_trials
    return ReliabilityMap(grid, alpha, binomial_stderr(alpha, n_trials), int(n_trials),
                          requirements, config, params)


def reliability_coverage(rmap: ReliabilityMap, alpha_star: float) -> CoverageResult:
    """Share of grid points whose estimated reliability reaches ``alpha_star``."""
    covered = np.asarray(rmap.alpha_hat) >= alpha_star
    return CoverageResult(float(np.count_nonzero(covered)) / covered.size, float(alpha_star),
                          rmap.requirements.gamma_latency, covered, rmap.config)


def analytic_reliability_single_link(mean_snr_linear: float, threshold: float) -> float:
    """Pr(SNR >= threshold) for one Rayleigh-faded link without interference."""
    if not mean_snr_linear > 0:
        raise InvalidArgument("mean SNR must be positive")
    if threshold < 0:
        raise InvalidArgument("threshold must be non-negative")
    return math.exp(-threshold / mean_snr_linear)
