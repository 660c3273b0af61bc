"""3D-UMi large-scale model (LoS probability, pathloss, shadowing) and small-scale fading.

Pathloss and LoS-probability constants follow the 3GPP 3D-UMi tables (TR 36.873,
Tables 7.2-1 and 7.2-2). All distances are in meters and the carrier frequency is
passed in Hz; the formulas use GHz internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument

SPEED_OF_LIGHT = 3.0e8

FADING_MODELS = ("rayleigh-rician", "rayleigh", "none")
LARGE_SCALE_MODES = ("ergodic", "static", "static-blockage")
ASSOCIATION_RULES = ("expected", "strongest")


@dataclass(frozen=True)
class ChannelParams:
    """Channel constants and link-model switches.

    ``fading`` selects the small-scale law: Rayleigh for NLOS with Rician-K for LOS,
    Rayleigh everywhere, or no small-scale fading. ``large_scale_mode`` controls when
    blockage and shadowing are drawn: every trial (``ergodic``), once per deployment
    (``static``), or blockage once with shadowing every trial (``static-blockage``).
    ``association`` picks the serving AP by LoS-probability-weighted gain
    (``expected``) or by the strongest mean link given the realized blockage
    (``strongest``, needs a static blockage mode).
    """

    los_decay_m: float = 36.0
    los_near_m: float = 18.0
    shadow_sigma_los_db: float = 3.0
    shadow_sigma_nlos_db: float = 4.0
    env_height_m: float = 1.0
    rician_k_db: float = 10.0
    min_distance_m: float = 10.0
    # LOS: slope*log10(d3d) + intercept + freq_coef*log10(f_GHz) [- bp_coef*log10(d'bp^2 + dh^2)]
    los_near_slope: float = 22.0
    los_far_slope: float = 40.0
    los_intercept: float = 28.0
    los_freq_coef: float = 20.0
    los_bp_coef: float = 9.0
    # NLOS: slope*log10(d3d) + intercept + freq_coef*log10(f_GHz) - hut_coef*(h_ut - 1.5)
    nlos_slope: float = 36.7
    nlos_intercept: float = 22.7
    nlos_freq_coef: float = 26.0
    nlos_hut_coef: float = 0.3
    fading: str = "rayleigh-rician"
    large_scale_mode: str = "ergodic"
    association: str = "expected"

    def __post_init__(self):
        if self.shadow_sigma_los_db < 0 or self.shadow_sigma_nlos_db < 0:
            raise InvalidArgument("shadowing sigmas must be non-negative")
        if not self.los_decay_m > 0:
            raise InvalidArgument("los_decay_m must be positive")
        if self.fading not in FADING_MODELS:
            raise InvalidArgument(f"fading must be one of {FADING_MODELS}")
        if self.large_scale_mode not in LARGE_SCALE_MODES:
            raise InvalidArgument(f"large_scale_mode must be one of {LARGE_SCALE_MODES}")
        if self.association not in ASSOCIATION_RULES:
            raise InvalidArgument(f"association must be one of {ASSOCIATION_RULES}")
        if self.association == "strongest" and self.large_scale_mode == "ergodic":
            raise InvalidArgument("'strongest' association needs a static blockage state")

    @property
    def rician_k(self) -> float:
        return 10.0 ** (self.rician_k_db / 10.0)

    def shadow_sigma(self, is_los):
        return np.where(is_los, self.shadow_sigma_los_db, self.shadow_sigma_nlos_db)


@dataclass(frozen=True)
class LinkGeometry:
    d2d: float
    d3d: float
    h_ap: float
    h_user: float

    @classmethod
    def from_d2d(cls, d2d: float, h_ap: float = 10.0, h_user: float = 1.5) -> "LinkGeometry":
        if d2d < 0:
            raise InvalidArgument("horizontal distance must be non-negative")
        return cls(float(d2d), math.hypot(d2d, h_ap - h_user), float(h_ap), float(h_user))


@dataclass(frozen=True)
class LargeScaleState:
    is_los: bool
    pathloss_db: float
    shadowing_db: float

    @property
    def total_loss_db(self) -> float:
        return self.pathloss_db + self.shadowing_db


def los_probability(d2d, params: ChannelParams = ChannelParams()):
    """UMi LoS probability: min(d1/d, 1)(1 - exp(-d/d2)) + exp(-d/d2)."""
    d = np.asarray(d2d, dtype=float)
    with np.errstate(divide="ignore"):
        near = np.minimum(params.los_near_m / d, 1.0)
    decay = np.exp(-d / params.los_decay_m)
    p = near * (1.0 - decay) + decay
    return float(p) if p.ndim == 0 else p


def breakpoint_distance(h_ap: float, h_user: float, carrier_hz: float,
                        params: ChannelParams = ChannelParams()) -> float:
    return (4.0 * (h_ap - params.env_height_m) * (h_user - params.env_height_m)
            * carrier_hz / SPEED_OF_LIGHT)


def pathloss_los_db(d2d, d3d, h_ap, h_user, carrier_hz, params: ChannelParams = ChannelParams()):
    """Dual-slope LOS pathloss. ``d2d`` selects the slope, ``d3d`` enters the formula."""
    d2d = np.asarray(d2d, dtype=float)
    d3d = np.asarray(d3d, dtype=float)
    f_ghz = carrier_hz / 1e9
    d_bp = breakpoint_distance(h_ap, h_user, carrier_hz, params)
    base = params.los_intercept + params.los_freq_coef * math.log10(f_ghz)
    near = params.los_near_slope * np.log10(d3d) + base
    far = (params.los_far_slope * np.log10(d3d) + base
           - params.los_bp_coef * math.log10(d_bp ** 2 + (h_ap - h_user) ** 2))
    pl = np.where(d2d <= d_bp, near, far)
    return float(pl) if pl.ndim == 0 else pl


def pathloss_nlos_db(d2d, d3d, h_ap, h_user, carrier_hz, params: ChannelParams = ChannelParams()):
    d3d_arr = np.asarray(d3d, dtype=float)
    f_ghz = carrier_hz / 1e9
    nlos = (params.nlos_slope * np.log10(d3d_arr) + params.nlos_intercept
            + params.nlos_freq_coef * math.log10(f_ghz) - params.nlos_hut_coef * (h_user - 1.5))
    pl = np.maximum(pathloss_los_db(d2d, d3d, h_ap, h_user, carrier_hz, params), nlos)
    return float(pl) if pl.ndim == 0 else pl


def clamp_geometry(d2d, h_ap: float, h_user: float, params: ChannelParams = ChannelParams()):
    """Clamp horizontal distances to the model's validity floor and return (d2d, d3d)."""
    d = np.maximum(np.asarray(d2d, dtype=float), params.min_distance_m)
    return d, np.hypot(d, h_ap - h_user)


def pathloss_db(geom: LinkGeometry, is_los: bool, carrier_hz: float,
                params: ChannelParams = ChannelParams()) -> float:
    d2d, d3d = clamp_geometry(geom.d2d, geom.h_ap, geom.h_user, params)
    fn = pathloss_los_db if is_los else pathloss_nlos_db
    return float(fn(d2d, d3d, geom.h_ap, geom.h_user, carrier_hz, params))


def sample_large_scale(geom: LinkGeometry, carrier_hz: float, params: ChannelParams,
                       rng: np.random.Generator) -> LargeScaleState:
    is_los = bool(rng.random() < los_probability(max(geom.d2d, 0.0), params))
    sigma = params.shadow_sigma_los_db if is_los else params.shadow_sigma_nlos_db
    shadow = float(rng.standard_normal() * sigma)
    return LargeScaleState(is_los, pathloss_db(geom, is_los, carrier_hz, params), shadow)


def sample_fading_gain(is_los, params: ChannelParams, rng: np.random.Generator, size=None):
    """Unit-mean small-scale power gain.

    NLOS links (and all links under ``rayleigh``) get an exponential power gain; LOS
    links under ``rayleigh-rician`` get the squared envelope of a Rician channel with
    factor K, normalized so that E[gain] = 1.
    """
    if params.fading == "none":
        return np.ones(size) if size is not None else 1.0
    los = np.broadcast_to(np.asarray(is_los, dtype=bool), () if size is None else size)
    if params.fading == "rayleigh" or not los.any():
        return rng.standard_exponential(size)
    k = params.rician_k
    a = math.sqrt(k / (k + 1.0))
    b = math.sqrt(0.5 / (k + 1.0))
    x = rng.standard_normal(size)
    y = rng.standard_normal(size)
    rician = (a + b * x) ** 2 + (b * y) ** 2
    if los.all():
        return rician
    return np.where(los, rician, 0.5 * (x * x + y * y))
