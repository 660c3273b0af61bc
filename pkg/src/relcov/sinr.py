"""Downlink SINR under full-buffer co-channel interference, and the latency map."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .channel import (
    ChannelParams,
    LinkGeometry,
    clamp_geometry,
    los_probability,
    pathloss_los_db,
    pathloss_nlos_db,
    sample_fading_gain,
    sample_large_scale,
)
from .errors import InvalidArgument, InvalidScenario
from .scenario import Deployment, EvaluationGrid, Location, ResourceConfig


@dataclass(frozen=True)
class SinrSample:
    sinr_linear: float
    serving_ap: int


@dataclass(frozen=True, eq=False)
class AssociationMap:
    serving: np.ndarray  # one AP index per grid point

    def __len__(self):
        return self.serving.shape[0]


@dataclass(frozen=True, eq=False)
class LinkBudget:
    """Per (point, AP) mean received powers and LoS probabilities, shape (points, aps)."""

    power_los_w: np.ndarray
    power_nlos_w: np.ndarray
    p_los: np.ndarray

    @property
    def expected_power_w(self) -> np.ndarray:
        return self.p_los * self.power_los_w + (1.0 - self.p_los) * self.power_nlos_w

    def expected_serving(self) -> np.ndarray:
        # argmax returns the first maximum, i.e. ties go to the lowest AP index
        return np.argmax(self.expected_power_w, axis=1)


@dataclass(frozen=True, eq=False)
class LinkTrace:
    """Per-trial serving power and aggregate interference at one location."""

    signal_w: np.ndarray
    interference_w: np.ndarray
    serving_ap: int

    def __len__(self):
        return self.signal_w.shape[0]

    def sinr(self, noise_w: float = 0.0) -> np.ndarray:
        return sinr_from_powers(self.signal_w, self.interference_w, noise_w)


def sinr_from_powers(signal_w, interference_w, noise_w: float = 0.0):
    denom = np.asarray(interference_w, dtype=float) + noise_w
    signal_w = np.asarray(signal_w, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(signal_w > 0, signal_w / denom, 0.0)
    return out


def link_budget(points, deployment: Deployment, config: ResourceConfig,
                params: ChannelParams = ChannelParams()) -> LinkBudget:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    aps = deployment.coords
    d2d_raw = np.hypot(pts[:, None, 0] - aps[None, :, 0], pts[:, None, 1] - aps[None, :, 1])
    h_ap, h_ut, fc = config.ap_height_m, config.user_height_m, config.carrier_hz
    d2d, d3d = clamp_geometry(d2d_raw, h_ap, h_ut, params)
    pl_los = pathloss_los_db(d2d, d3d, h_ap, h_ut, fc, params)
    pl_nlos = pathloss_nlos_db(d2d, d3d, h_ap, h_ut, fc, params)
    ptx = config.tx_power_w
    return LinkBudget(
        power_los_w=np.atleast_2d(ptx * 10.0 ** (-np.asarray(pl_los) / 10.0)),
        power_nlos_w=np.atleast_2d(ptx * 10.0 ** (-np.asarray(pl_nlos) / 10.0)),
        p_los=np.atleast_2d(los_probability(d2d_raw, params)),
    )


def associate(loc: Location, deployment: Deployment, config: ResourceConfig,
              params: ChannelParams = ChannelParams()) -> int:
    """Serving AP by largest LoS-probability-weighted mean gain; ties to the lowest index."""
    if len(deployment) == 0:
        raise InvalidScenario("cannot associate a user with an empty deployment")
    return int(link_budget([[loc.x, loc.y]], deployment, config, params).expected_serving()[0])


def association_map(grid: EvaluationGrid, deployment: Deployment, config: ResourceConfig,
                    params: ChannelParams = ChannelParams()) -> AssociationMap:
    if len(deployment) == 0:
        raise InvalidScenario("cannot associate users with an empty deployment")
    return AssociationMap(link_budget(grid.coords, deployment, config, params).expected_serving())


def sample_sinr(loc: Location, deployment: Deployment, assoc: int, config: ResourceConfig,
                params: ChannelParams, rng: np.random.Generator) -> SinrSample:
    """One ergodic SINR trial, drawing every link's state independently (AP order)."""
    if not 0 <= assoc < len(deployment):
        raise InvalidScenario(f"serving index {assoc} out of range")
    signal = 0.0
    interference = 0.0
    for j, ap in enumerate(deployment.ap_locations):
        geom = LinkGeometry.from_d2d(loc.distance_to(ap), config.ap_height_m, config.user_height_m)
        state = sample_large_scale(geom, config.carrier_hz, params, rng)
        fading = float(sample_fading_gain(state.is_los, params, rng))
        power = config.tx_power_w * fading * 10.0 ** (-state.total_loss_db / 10.0)
        if j == assoc:
            signal = power
        else:
            interference += power
    sinr = float(sinr_from_powers(signal, interference, config.noise_power_w()))
    return SinrSample(sinr, assoc)


def simulate_trace(budget: LinkBudget, row: int, params: ChannelParams, n_trials: int,
                   rng: np.random.Generator) -> LinkTrace:
    """Draw ``n_trials`` serving/interference powers at grid row ``row`` of ``budget``."""
    if budget.power_los_w.shape[1] == 0:
        raise InvalidScenario("cannot simulate SINR without any AP")
    if n_trials < 1:
        raise InvalidArgument("n_trials must be at least 1")
    signal = np.empty(n_trials)
    interference = np.empty(n_trials)
    serving = _kernels.link_powers(
        rng,
        np.ascontiguousarray(budget.power_los_w[row]),
        np.ascontiguousarray(budget.power_nlos_w[row]),
        np.ascontiguousarray(budget.p_los[row]),
        float(params.shadow_sigma_los_db),
        float(params.shadow_sigma_nlos_db),
        _kernels.FADING_CODES[params.fading],
        float(params.rician_k),
        _kernels.MODE_CODES[params.large_scale_mode],
        _kernels.ASSOC_CODES[params.association],
        int(np.argmax(budget.expected_power_w[row])),
        signal,
        interference,
    )
    return LinkTrace(signal, interference, int(serving))


def latency(sinr_linear, payload_bits: float, bandwidth_hz: float):
    """Payload over Shannon rate; infinite when the SINR is zero."""
    if not (payload_bits > 0 and bandwidth_hz > 0):
        raise InvalidArgument("payload and bandwidth must be positive")
    sinr = np.asarray(sinr_linear, dtype=float)
    with np.errstate(divide="ignore"):
        out = payload_bits * math.log(2.0) / (bandwidth_hz * np.log1p(sinr))
    return float(out) if out.ndim == 0 else out


def sinr_threshold(payload_bits: float, bandwidth_hz: float, gamma_latency: float) -> float:
    """Smallest SINR that delivers the payload within the deadline: 2^(b/(w*gamma)) - 1."""
    if not (payload_bits > 0 and bandwidth_hz > 0 and gamma_latency > 0):
        raise InvalidArgument("payload, bandwidth and deadline must be positive")
    try:
        return math.expm1(math.log(2.0) * payload_bits / (bandwidth_hz * gamma_latency))
    except OverflowError:
        return math.inf
