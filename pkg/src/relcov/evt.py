"""Peaks-over-threshold modeling of the lower SINR tail and outage radio maps.

The lower tail of the SINR becomes an upper tail through ``y = -sinr`` (or
``y = -10 log10 sinr`` in the dB domain). Exceedances of ``y`` over a high empirical
quantile ``u`` are fitted with a generalized Pareto law, which is then used to
extrapolate outage probabilities far below what the samples resolve directly.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from collections import defaultdict
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize
from scipy.spatial import cKDTree

from .errors import FitFailed, InsufficientData, InvalidArgument, ResolutionLimit
from .reliability import CoverageResult
from .scenario import EvaluationGrid, Requirements, ResourceConfig, ServiceArea, build_grid
from .sinr import sinr_threshold

TAIL_DOMAINS = ("linear", "db")
MIN_EXCEEDANCES = 50
XI_ZERO_TOL = 1e-6
_DB_FLOOR = 1e-300


# -- domain transforms -------------------------------------------------------

def to_tail_domain(sinr, domain: str = "linear"):
    sinr = np.asarray(sinr, dtype=float)
    if domain == "linear":
        return -sinr
    if domain == "db":
        return -10.0 * np.log10(np.maximum(sinr, _DB_FLOOR))
    raise InvalidArgument(f"unknown tail domain {domain!r}")


def from_tail_domain(y, domain: str = "linear"):
    y = np.asarray(y, dtype=float)
    if domain == "linear":
        return -y
    if domain == "db":
        return 10.0 ** (-y / 10.0)
    raise InvalidArgument(f"unknown tail domain {domain!r}")


# -- threshold selection and fitting -----------------------------------------

@dataclass(frozen=True, eq=False)
class TailThreshold:
    u: float
    zeta_u: float
    exceedances: np.ndarray
    n_samples: int
    domain: str = "db"


def select_threshold(samples, tail_fraction: float = 0.05, domain: str = "db",
                     min_exceedances: int = MIN_EXCEEDANCES) -> TailThreshold:
    """Place the POT threshold at the empirical ``1 - tail_fraction`` quantile of ``y``."""
    if not 0.0 < tail_fraction < 0.5:
        raise InvalidArgument("tail_fraction must lie in (0, 0.5)")
    y = to_tail_domain(samples, domain)
    n = y.size
    if n * tail_fraction < min_exceedances:
        required = math.ceil(min_exceedances / tail_fraction)
        raise InsufficientData(
            f"{n} samples give fewer than {min_exceedances} exceedances at tail fraction "
            f"{tail_fraction}; need at least {required} samples", required)
    u = float(np.quantile(y, 1.0 - tail_fraction))
    exc = y[y > u] - u
    if exc.size < min_exceedances:
        raise InsufficientData(
            f"only {exc.size} samples exceed the threshold (ties or constant data); "
            f"need {min_exceedances}", min_exceedances)
    return TailThreshold(u, exc.size / n, exc, int(n), domain)


@dataclass(frozen=True)
class GpdFit:
    """Generalized Pareto model of the exceedances over ``threshold_u``."""

    xi: float
    sigma: float
    threshold_u: float = 0.0
    zeta_u: float = 1.0
    n_exceedances: int = 0
    method: str = "mle"
    domain: str = "db"

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidArgument("GPD scale must be positive")
        if not 0.0 < self.zeta_u <= 1.0:
            raise InvalidArgument("exceedance fraction must lie in (0, 1]")

    @property
    def support_bound(self) -> float:
        """Upper end of ``y`` under the fit (infinite unless xi < 0)."""
        if self.xi < 0:
            return self.threshold_u - self.sigma / self.xi
        return math.inf

    def survival(self, y):
        """Pr(Y > y) for y at or beyond the threshold."""
        z = np.maximum(np.asarray(y, dtype=float) - self.threshold_u, 0.0)
        if abs(self.xi) < XI_ZERO_TOL:
            s = np.exp(-z / self.sigma)
        else:
            base = 1.0 + self.xi * z / self.sigma
            with np.errstate(divide="ignore", invalid="ignore"):
                s = np.where(base > 0, np.power(np.maximum(base, 0.0), -1.0 / self.xi), 0.0)
        out = np.clip(self.zeta_u * s, 0.0, 1.0)
        return float(out) if out.ndim == 0 else out

    def tail_quantile(self, prob: float) -> float:
        """The ``y`` with Pr(Y > y) = prob, for prob <= zeta_u."""
        if prob <= 0:
            if self.xi < 0:
                return self.support_bound
            return math.inf
        ratio = prob / self.zeta_u
        if abs(self.xi) < XI_ZERO_TOL:
            return self.threshold_u - self.sigma * math.log(ratio)
        return self.threshold_u + self.sigma / self.xi * (ratio ** (-self.xi) - 1.0)

    def to_dict(self) -> dict:
        return asdict(self)


def _profile_loglik(theta: float, x: np.ndarray) -> float:
    # profile log-likelihood in theta = xi / sigma, with xi(theta) = mean(log(1 + theta x))
    if theta == 0.0:
        return -x.size * (math.log(x.mean()) + 1.0)
    z = 1.0 + theta * x
    if np.any(z <= 0):
        return -math.inf
    xi = float(np.mean(np.log(z)))
    if xi == 0.0 or xi / theta <= 0:
        return -x.size * (math.log(x.mean()) + 1.0)
    return -x.size * (math.log(xi / theta) + xi + 1.0)


def _gpd_mle(x: np.ndarray) -> tuple[float, float] | None:
    """Maximum likelihood via a grid scan of the profile likelihood plus Brent refinement.

    Returns None when there is no interior maximum (likelihood climbs to the support
    edge, the xi <= -1 regime) or the refinement fails.
    """
    xmax = float(x.max())
    xbar = float(x.mean())
    half = np.logspace(-6, math.log10(0.5), 30)
    s = np.concatenate([half, 1.0 - half[::-1][1:]])
    neg = np.sort(-s / xmax)
    pos = np.logspace(-6, 3, 50) / xbar
    thetas = np.concatenate([neg, [0.0], pos])
    ll = np.array([_profile_loglik(t, x) for t in thetas])
    interior = [i for i in range(1, len(thetas) - 1) if ll[i] >= ll[i - 1] and ll[i] >= ll[i + 1]]
    if not interior:
        return None
    best = max(interior, key=lambda i: ll[i])
    res = optimize.minimize_scalar(lambda t: -_profile_loglik(t, x),
                                   bounds=(thetas[best - 1], thetas[best + 1]),
                                   method="bounded", options={"xatol": 1e-12 / max(xmax, 1e-300)})
    if not res.success or not np.isfinite(res.fun):
        return None
    theta = float(res.x)
    if -res.fun < ll[best] - 1e-9 * abs(ll[best]):
        theta = float(thetas[best])
    if abs(theta) * xbar < 1e-10:
        return 0.0, xbar
    xi = float(np.mean(np.log1p(theta * x)))
    sigma = xi / theta
    if not (np.isfinite(xi) and sigma > 0):
        return None
    return xi, sigma


def _gpd_pwm(x: np.ndarray) -> tuple[float, float] | None:
    """Probability-weighted-moments estimator (Hosking and Wallis)."""
    xs = np.sort(x)
    k = xs.size
    p = (np.arange(1, k + 1) - 0.35) / k
    a0 = float(xs.mean())
    a1 = float(np.mean((1.0 - p) * xs))
    denom = a0 - 2.0 * a1
    if not denom > 0:
        return None
    shape_hw = a0 / denom - 2.0
    sigma = 2.0 * a0 * a1 / denom
    xi = -shape_hw
    if not (np.isfinite(xi) and sigma > 0):
        return None
    if xi < 0:
        # keep every observed exceedance inside the fitted support
        sigma = max(sigma, -xi * float(xs[-1]))
    return xi, sigma


def fit_gpd(exceedances, threshold_u: float = 0.0, zeta_u: float = 1.0,
            domain: str = "db", method: str = "auto") -> GpdFit:
    """Fit (xi, sigma) to positive exceedances; MLE first, PWM when the MLE does not converge."""
    x = np.asarray(exceedances, dtype=float)
    if x.size < MIN_EXCEEDANCES:
        raise InsufficientData(f"{x.size} exceedances; need {MIN_EXCEEDANCES}", MIN_EXCEEDANCES)
    if np.any(x <= 0) or not np.all(np.isfinite(x)):
        raise InvalidArgument("exceedances must be positive and finite")
    if np.ptp(x) == 0:
        raise InsufficientData("all exceedances are equal", MIN_EXCEEDANCES)
    est = None
    used = method
    if method in ("auto", "mle"):
        est = _gpd_mle(x)
        used = "mle"
    if est is None and method in ("auto", "pwm"):
        est = _gpd_pwm(x)
        used = "pwm"
    if est is None:
        raise FitFailed(f"GPD fit did not converge ({method})")
    xi, sigma = est
    return GpdFit(float(xi), float(sigma), float(threshold_u), float(zeta_u), int(x.size), used, domain)


def fit_tail(samples, tail_fraction: float = 0.05, domain: str = "db",
             method: str = "auto") -> GpdFit:
    sel = select_threshold(samples, tail_fraction, domain)
    return fit_gpd(sel.exceedances, sel.u, sel.zeta_u, domain, method)


def empirical_outage(samples, sinr_t: float) -> float:
    s = np.asarray(samples, dtype=float)
    return float(np.count_nonzero(s < sinr_t)) / s.size


def tail_outage(fit: GpdFit, sinr_t: float, samples=None) -> float:
    """Pr(SINR < t): GPD extrapolation beyond the threshold, empirical fraction below it."""
    y_t = float(to_tail_domain(sinr_t, fit.domain))
    if y_t > fit.threshold_u:
        return fit.survival(y_t)
    if samples is None:
        raise InvalidArgument("query lies inside the bulk; pass the samples for the empirical branch")
    return empirical_outage(samples, sinr_t)


def beyond_support(fit: GpdFit, sinr_t: float) -> bool:
    return float(to_tail_domain(sinr_t, fit.domain)) >= fit.support_bound


MAX_EXTRAPOLATION_DECADES = 6.0


def admissible_threshold(fit: GpdFit | None, epsilon: float, samples=None) -> float:
    """Largest SINR threshold whose estimated outage stays within ``epsilon``.

    Inverts :func:`tail_outage`: closed form on the GPD branch (``epsilon < zeta_u``),
    order statistics on the empirical branch. A zero result means no positive
    threshold meets the target.
    """
    if not 0.0 <= epsilon < 1.0:
        raise InvalidArgument("epsilon must lie in [0, 1)")
    if fit is not None and epsilon < fit.zeta_u:
        if epsilon == 0.0 and fit.xi >= 0:
            raise ResolutionLimit("zero outage is unattainable on an unbounded tail fit",
                                  fit.zeta_u * 10.0 ** -MAX_EXTRAPOLATION_DECADES)
        floor = fit.zeta_u * 10.0 ** -MAX_EXTRAPOLATION_DECADES
        if 0.0 < epsilon < floor:
            raise ResolutionLimit(f"epsilon {epsilon:g} is below the extrapolation floor {floor:g}",
                                  floor)
        y_star = fit.tail_quantile(epsilon)
        return max(float(from_tail_domain(y_star, fit.domain)), 0.0)
    if samples is None:
        raise InvalidArgument("epsilon lies in the bulk; pass the samples for the empirical branch")
    s = np.sort(np.asarray(samples, dtype=float))
    n = s.size
    if epsilon < 1.0 / n:
        raise ResolutionLimit(f"{n} samples resolve outages down to {1.0 / n:g}", 1.0 / n)
    k = int(math.floor(epsilon * n))
    # Pr_hat(SINR < s[k]) <= k / n <= epsilon
    return float(s[min(k, n - 1)])


# -- measurements ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MeasurementSet:
    """Location-specific SINR sample arrays (linear scale)."""

    locations: np.ndarray
    samples: tuple
    min_samples: int = 2000

    def __post_init__(self):
        if len(self.locations) != len(self.samples):
            raise InvalidArgument("one sample array per location is required")
        for i, s in enumerate(self.samples):
            if len(s) < self.min_samples:
                raise InsufficientData(
                    f"entry {i} has {len(s)} samples; need {self.min_samples}", self.min_samples)
            if np.any(np.asarray(s) <= 0):
                raise InvalidArgument(f"entry {i} contains non-positive SINR samples")

    def __len__(self):
        return len(self.samples)

    @property
    def counts(self) -> np.ndarray:
        return np.array([len(s) for s in self.samples])

    @classmethod
    def from_arrays(cls, locations, samples, min_samples: int = 2000) -> "MeasurementSet":
        locs = np.asarray(locations, dtype=float).reshape(-1, 2)
        return cls(locs, tuple(np.asarray(s, dtype=float) for s in samples), min_samples)

    @classmethod
    def from_csv(cls, path, min_samples: int = 2000) -> "MeasurementSet":
        groups: dict[tuple[float, float], list[float]] = defaultdict(list)
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = {"x", "y", "sinr_linear"} - set(reader.fieldnames or [])
            if missing:
                raise InvalidArgument(f"measurement CSV lacks columns {sorted(missing)}")
            for row in reader:
                groups[(float(row["x"]), float(row["y"]))].append(float(row["sinr_linear"]))
        keys = list(groups)
        return cls.from_arrays(keys, [groups[k] for k in keys], min_samples)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "sinr_linear"])
            for (x, y), s in zip(self.locations, self.samples):
                for v in s:
                    w.writerow([f"{x:.6g}", f"{y:.6g}", repr(float(v))])

    @classmethod
    def from_json(cls, path, min_samples: int = 2000) -> "MeasurementSet":
        with open(path) as fh:
            d = json.load(fh)
        entries = d["entries"]
        return cls.from_arrays([[e["x"], e["y"]] for e in entries],
                               [e["sinr_linear"] for e in entries], min_samples)

    def to_json(self, path) -> None:
        entries = [{"x": float(x), "y": float(y), "sinr_linear": np.asarray(s).tolist()}
                   for (x, y), s in zip(self.locations, self.samples)]
        with open(path, "w") as fh:
            json.dump({"entries": entries}, fh)


# -- spatial interpolation ---------------------------------------------------

@dataclass(frozen=True)
class InterpSpec:
    method: str = "idw"
    power: float = 2.0
    k: int = 8
    log_floor: float = -15.0

    def __post_init__(self):
        if self.method not in ("idw", "gp"):
            raise InvalidArgument("interpolator must be 'idw' or 'gp'")
        if self.k < 1:
            raise InvalidArgument("k must be at least 1")


def idw_interpolate(known_xy, known_values, query_xy, power: float = 2.0, k: int = 8) -> np.ndarray:
    """Inverse-distance weighting over the k nearest known points (a convex combination)."""
    known_xy = np.asarray(known_xy, dtype=float).reshape(-1, 2)
    vals = np.asarray(known_values, dtype=float)
    query_xy = np.asarray(query_xy, dtype=float).reshape(-1, 2)
    if vals.size == 0:
        raise InsufficientData("no known values to interpolate from", 1)
    k = min(k, vals.size)
    dist, idx = cKDTree(known_xy).query(query_xy, k=k)
    dist = dist.reshape(len(query_xy), k)
    idx = idx.reshape(len(query_xy), k)
    with np.errstate(divide="ignore"):
        w = 1.0 / dist ** power
    exact = dist[:, 0] == 0.0
    w[exact] = 0.0
    w[exact, 0] = 1.0
    w /= w.sum(axis=1, keepdims=True)
    return np.sum(w * vals[idx], axis=1)


def gp_interpolate(known_xy, known_values, query_xy, length_scale: float = 20.0) -> np.ndarray:
    """Gaussian-process regression with a squared-exponential kernel fitted by marginal likelihood."""
    from sklearn.gaussian_process import GaussianProcessRegressor
    from sklearn.exceptions import ConvergenceWarning
    from sklearn.gaussian_process.kernels import RBF, ConstantKernel, WhiteKernel

    known_xy = np.asarray(known_xy, dtype=float).reshape(-1, 2)
    vals = np.asarray(known_values, dtype=float)
    if vals.size == 1 or np.ptp(vals) == 0:
        return np.full(len(np.atleast_2d(query_xy)), vals[0])
    kernel = ConstantKernel(1.0) * RBF(length_scale, (1e-1, 1e4)) + WhiteKernel(1e-2, (1e-8, 1e1))
    gp = GaussianProcessRegressor(kernel=kernel, normalize_y=True, n_restarts_optimizer=2,
                                  random_state=0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)  # hyperparameters at a bound are fine
        gp.fit(known_xy, vals)
    return gp.predict(np.asarray(query_xy, dtype=float).reshape(-1, 2))


def interpolate(known_xy, known_values, query_xy, spec: InterpSpec = InterpSpec()) -> np.ndarray:
    if spec.method == "gp":
        return gp_interpolate(known_xy, known_values, query_xy)
    return idw_interpolate(known_xy, known_values, query_xy, spec.power, spec.k)


# -- outage maps -------------------------------------------------------------

MEASURED = "measured"
INTERPOLATED = "interpolated"


@dataclass(frozen=True, eq=False)
class OutageMap:
    grid: EvaluationGrid
    outage: np.ndarray
    provenance: np.ndarray  # MEASURED / INTERPOLATED per point
    sinr_t: float
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.outage.shape[0]

    def log10_outage(self, floor: float = -15.0) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.maximum(np.log10(self.outage), floor)

    def to_csv(self, path) -> None:
        lo = self.log10_outage()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "outage", "log10_outage", "provenance"])
            for i in range(len(self)):
                w.writerow([f"{self.grid.xs[i]:.6g}", f"{self.grid.ys[i]:.6g}",
                            f"{self.outage[i]:.6e}", f"{lo[i]:.6f}", self.provenance[i]])

    def to_dict(self) -> dict:
        return {
            "kind": "outage_map",
            "area": asdict(self.grid.area),
            "spacing": self.grid.spacing,
            "sinr_threshold": self.sinr_t,
            "meta": self.meta,
            "x": self.grid.xs.tolist(),
            "y": self.grid.ys.tolist(),
            "outage": self.outage.tolist(),
            "log10_outage": self.log10_outage().tolist(),
            "provenance": [str(p) for p in self.provenance],
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def from_json(cls, path) -> "OutageMap":
        with open(path) as fh:
            d = json.load(fh)
        grid = build_grid(ServiceArea(**d["area"]), d["spacing"])
        return cls(grid, np.asarray(d["outage"], dtype=float), np.asarray(d["provenance"]),
                   float(d["sinr_threshold"]), d.get("meta", {}))


def outage_at_location(samples, sinr_t: float, tail_fraction: float = 0.05,
                       domain: str = "db", estimator: str = "evt") -> float:
    if estimator == "empirical":
        return empirical_outage(samples, sinr_t)
    fit = fit_tail(samples, tail_fraction, domain)
    return tail_outage(fit, sinr_t, samples)


def assemble_outage_map(grid: EvaluationGrid, locations, outages, sinr_t: float,
                        interp: InterpSpec = InterpSpec(), meta: dict | None = None) -> OutageMap:
    """Place per-location outages on the grid and interpolate the rest in log10 domain.

    ``outages`` may contain NaN for locations whose estimate failed; those are left
    out of the interpolation support and their grid points are flagged interpolated.
    """
    locs = np.asarray(locations, dtype=float).reshape(-1, 2)
    vals = np.asarray(outages, dtype=float)
    ok = np.isfinite(vals)
    if not ok.any():
        raise InsufficientData("no measurement produced an outage estimate", 1)
    with np.errstate(divide="ignore"):
        log_vals = np.maximum(np.log10(vals[ok]), interp.log_floor)
    n = len(grid)
    outage = np.empty(n)
    prov = np.full(n, INTERPOLATED, dtype=object)
    tree = cKDTree(grid.coords)
    dist, gidx = tree.query(locs[ok])
    on_grid = dist <= 1e-6 * grid.spacing
    measured_idx = gidx[on_grid]
    outage[measured_idx] = vals[ok][on_grid]
    prov[measured_idx] = MEASURED
    rest = np.flatnonzero(prov != MEASURED)
    if rest.size:
        est = interpolate(locs[ok], log_vals, grid.coords[rest], interp)
        outage[rest] = np.clip(10.0 ** est, 0.0, 1.0)
    return OutageMap(grid, outage, prov.astype(str), float(sinr_t), dict(meta or {}))


def build_outage_map(measurements: MeasurementSet, grid: EvaluationGrid, requirements: Requirements,
                     config: ResourceConfig, interp_spec: InterpSpec = InterpSpec(),
                     tail_fraction: float = 0.05, domain: str = "db",
                     estimator: str = "evt") -> OutageMap:
    if len(measurements) < 1:
        raise InsufficientData("at least one measurement entry is required", 1)
    t = sinr_threshold(requirements.payload_bits, config.bandwidth_hz, requirements.gamma_latency)
    vals = []
    failed = 0
    for s in measurements.samples:
        try:
            vals.append(outage_at_location(s, t, tail_fraction, domain, estimator))
        except (InsufficientData, FitFailed):
            vals.append(math.nan)
            failed += 1
    meta = {"estimator": estimator, "domain": domain, "tail_fraction": tail_fraction,
            "failed_fits": failed, "interpolator": interp_spec.method,
            "gamma": requirements.gamma_latency, "payload_bits": requirements.payload_bits,
            "bandwidth_hz": config.bandwidth_hz}
    return assemble_outage_map(grid, measurements.locations, vals, t, interp_spec, meta)


def coverage_from_outage(omap: OutageMap, alpha_star: float, gamma: float = math.nan) -> CoverageResult:
    covered = omap.outage <= 1.0 - alpha_star
    return CoverageResult(float(np.count_nonzero(covered)) / covered.size, float(alpha_star),
                          float(omap.meta.get("gamma", gamma)), covered)


# -- simulated measurement campaigns ------------------------------------------

@dataclass(frozen=True)
class TailSummary:
    """Tail statistics of one location under one noise level.

    ``evt`` and ``empirical`` hold outages per queried threshold; ``sinr_star`` the
    admissible thresholds per queried outage target. Entries are NaN when the fit
    (or the inversion) failed; ``error`` then names the reason.
    """

    fit: GpdFit | None
    evt: np.ndarray
    empirical: np.ndarray
    sinr_star: np.ndarray
    error: str | None = None

    def outage(self, estimator: str = "evt") -> np.ndarray:
        return self.empirical if estimator == "empirical" else self.evt


def summarize_tail(samples, thresholds, epsilons=(), tail_fraction: float = 0.05,
                   domain: str = "db") -> TailSummary:
    s = np.asarray(samples, dtype=float)
    thresholds = np.atleast_1d(np.asarray(thresholds, dtype=float))
    epsilons = np.atleast_1d(np.asarray(epsilons, dtype=float))
    emp = np.array([empirical_outage(s, t) for t in thresholds])
    evt = np.full(thresholds.shape, math.nan)
    star = np.full(epsilons.shape, math.nan)
    try:
        fit = fit_tail(s, tail_fraction, domain)
    except (InsufficientData, FitFailed) as exc:
        return TailSummary(None, evt, emp, star, f"{type(exc).__name__}: {exc}")
    evt = np.array([tail_outage(fit, t, s) for t in thresholds])
    for i, eps in enumerate(epsilons):
        try:
            star[i] = admissible_threshold(fit, eps, s)
        except ResolutionLimit:
            pass
    return TailSummary(fit, evt, emp, star)


class TailProbe:
    """Reducer summarizing a trace's SINR tail for several noise levels.

    ``thresholds[c]`` (and ``epsilons``) are queried under noise power ``noise_ws[c]``.
    Identical noise levels share one fit.
    """

    def __init__(self, noise_ws, thresholds, epsilons=(), tail_fraction: float = 0.05,
                 domain: str = "db"):
        self.noise_ws = [float(n) for n in np.atleast_1d(noise_ws)]
        self.thresholds = [np.atleast_1d(np.asarray(t, dtype=float)) for t in thresholds]
        if len(self.thresholds) != len(self.noise_ws):
            raise InvalidArgument("one threshold list per noise level is required")
        self.epsilons = np.atleast_1d(np.asarray(epsilons, dtype=float))
        self.tail_fraction = float(tail_fraction)
        self.domain = domain

    def __call__(self, trace) -> list[TailSummary]:
        out = []
        cache = {}
        for noise, thr in zip(self.noise_ws, self.thresholds):
            key = (noise, tuple(thr))
            if key not in cache:
                cache[key] = summarize_tail(trace.sinr(noise), thr, self.epsilons,
                                            self.tail_fraction, self.domain)
            out.append(cache[key])
        return out


LAYOUTS = ("full-grid", "subgrid", "random")


def measurement_layout(grid: EvaluationGrid, layout: str = "full-grid", seed: int = 0) -> np.ndarray:
    """Grid indices carrying a measurement: ``full-grid``, ``subgrid:k`` or ``random:m``."""
    name, _, arg = layout.partition(":")
    n = len(grid)
    if name == "full-grid" and not arg:
        return np.arange(n)
    try:
        k = int(arg)
    except ValueError:
        raise InvalidArgument(f"bad measurement layout {layout!r}") from None
    if k < 1:
        raise InvalidArgument(f"bad measurement layout {layout!r}")
    if name == "subgrid":
        idx = np.arange(n)
        ix, iy = idx % grid.nx, idx // grid.nx
        return idx[(ix % k == 0) & (iy % k == 0)]
    if name == "random":
        if k > n:
            raise InvalidArgument(f"random:{k} exceeds the {n} grid points")
        return np.sort(np.random.default_rng(seed).choice(n, size=k, replace=False))
    raise InvalidArgument(f"unknown measurement layout {layout!r}")


def simulate_tails(grid: EvaluationGrid, indices, deployment, config: ResourceConfig, params,
                   n_samples: int, master_seed: int, probe: TailProbe, stream_key=(0,),
                   workers: int = 1) -> list[list[TailSummary]]:
    """Simulate ``n_samples`` SINR draws at the given grid indices and summarize each tail."""
    from .montecarlo import run_points

    idx = np.asarray(indices, dtype=np.int64)
    return run_points(grid.coords[idx], deployment, config, params, n_samples, master_seed,
                      probe, stream_key=stream_key, workers=workers, indices=idx)


def simulated_outage_maps(grid: EvaluationGrid, deployment, config: ResourceConfig, params,
                          payload_bits: float, gammas, n_samples: int, master_seed: int,
                          layout: str = "full-grid", interp: InterpSpec = InterpSpec(),
                          tail_fraction: float = 0.05, domain: str = "db",
                          estimator: str = "evt", stream_key=(0,), workers: int = 1,
                          layout_seed: int = 0) -> dict[float, OutageMap]:
    """Outage maps (one per deadline) from simulated measurements at a layout's locations."""
    gammas = [float(g) for g in np.atleast_1d(gammas)]
    ts = [sinr_threshold(payload_bits, config.bandwidth_hz, g) for g in gammas]
    idx = measurement_layout(grid, layout, layout_seed)
    probe = TailProbe([config.noise_power_w()], [ts], (), tail_fraction, domain)
    summaries = simulate_tails(grid, idx, deployment, config, params, n_samples, master_seed,
                               probe, stream_key, workers)
    failed = int(sum(s[0].fit is None for s in summaries))
    maps = {}
    for j, (g, t) in enumerate(zip(gammas, ts)):
        vals = [s[0].outage(estimator)[j] for s in summaries]
        meta = {"estimator": estimator, "domain": domain, "tail_fraction": tail_fraction,
                "failed_fits": failed, "interpolator": interp.method, "layout": layout,
                "gamma": g, "payload_bits": payload_bits, "bandwidth_hz": config.bandwidth_hz,
                "n_samples": int(n_samples)}
        maps[g] = assemble_outage_map(grid, grid.coords[idx], vals, t, interp, meta)
    return maps
