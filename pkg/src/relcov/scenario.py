"""Service areas, evaluation grids, requirements and random AP deployments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument


@dataclass(frozen=True)
class ServiceArea:
    """Rectangular service area anchored at the origin, in meters."""

    width: float = 200.0
    height: float = 200.0

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise InvalidArgument(f"area sides must be positive, got {self.width} x {self.height}")

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)

    def contains(self, x, y) -> bool:
        return 0.0 <= x <= self.width and 0.0 <= y <= self.height


@dataclass(frozen=True)
class Location:
    x: float
    y: float

    def distance_to(self, other: "Location") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True, eq=False)
class EvaluationGrid:
    """Cell-center grid over a service area, row-major (y outer, x inner)."""

    area: ServiceArea
    spacing: float
    nx: int
    ny: int
    coords: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return self.coords.shape[0]

    @property
    def points(self) -> list[Location]:
        return [Location(float(x), float(y)) for x, y in self.coords]

    @property
    def xs(self) -> np.ndarray:
        return self.coords[:, 0]

    @property
    def ys(self) -> np.ndarray:
        return self.coords[:, 1]

    def subset(self, indices) -> np.ndarray:
        return self.coords[np.asarray(indices, dtype=np.intp)]

    def nearest_index(self, x: float, y: float) -> int:
        ix = min(max(int(x // self.spacing), 0), self.nx - 1)
        iy = min(max(int(y // self.spacing), 0), self.ny - 1)
        return iy * self.nx + ix


@dataclass(frozen=True)
class Requirements:
    """Service targets of a vertical: latency deadline, payload, reliability and coverage."""

    gamma_latency: float = 1e-3
    payload_bits: float = 256.0
    alpha_star: float = 0.999
    eta_star: float = 0.95

    def __post_init__(self):
        if not self.gamma_latency > 0:
            raise InvalidArgument("gamma_latency must be positive")
        if not self.payload_bits > 0:
            raise InvalidArgument("payload_bits must be positive")
        if not 0.0 < self.alpha_star < 1.0:
            raise InvalidArgument("alpha_star must lie in (0, 1)")
        if not 0.0 < self.eta_star <= 1.0:
            raise InvalidArgument("eta_star must lie in (0, 1]")

    @property
    def outage_target(self) -> float:
        return 1.0 - self.alpha_star

    @property
    def required_rate(self) -> float:
        """Rate in bit/s that delivers the payload exactly at the deadline."""
        return self.payload_bits / self.gamma_latency


@dataclass(frozen=True)
class ResourceConfig:
    """Design vector (bandwidth, AP count) plus the fixed radio constants."""

    bandwidth_hz: float = 50e6
    n_aps: int = 5
    tx_power_dbm: float = 30.0
    carrier_hz: float = 1.5e9
    ap_height_m: float = 10.0
    user_height_m: float = 1.5
    noise_figure_db: float = 9.0
    noise_enabled: bool = True

    def __post_init__(self):
        if not self.bandwidth_hz > 0:
            raise InvalidArgument("bandwidth_hz must be positive")
        if self.n_aps < 0:
            raise InvalidArgument("n_aps must be non-negative")
        if not self.carrier_hz > 0:
            raise InvalidArgument("carrier_hz must be positive")
        if not (self.ap_height_m > 0 and self.user_height_m > 0):
            raise InvalidArgument("antenna heights must be positive")

    @property
    def tx_power_w(self) -> float:
        return 10.0 ** ((self.tx_power_dbm - 30.0) / 10.0)

    def noise_power_w(self, bandwidth_hz: float | None = None) -> float:
        """Thermal noise power over the band; zero when noise is disabled."""
        if not self.noise_enabled:
            return 0.0
        w = self.bandwidth_hz if bandwidth_hz is None else bandwidth_hz
        return 10.0 ** ((-174.0 + self.noise_figure_db - 30.0) / 10.0) * w


@dataclass(frozen=True, eq=False)
class Deployment:
    ap_locations: tuple[Location, ...]
    seed: int

    def __len__(self) -> int:
        return len(self.ap_locations)

    @property
    def coords(self) -> np.ndarray:
        return np.array([[p.x, p.y] for p in self.ap_locations], dtype=float).reshape(-1, 2)

    @classmethod
    def from_coords(cls, coords, seed: int = 0) -> "Deployment":
        arr = np.asarray(coords, dtype=float).reshape(-1, 2)
        return cls(tuple(Location(float(x), float(y)) for x, y in arr), int(seed))


def derive_seed(master_seed: int, *keys: int) -> int:
    """Mix a master seed with integer entity keys into an independent 64-bit seed."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0])


def make_rng(master_seed: int, *keys: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def generate_bpp_deployment(area: ServiceArea, n: int, seed: int) -> Deployment:
    """Place ``n`` APs independently and uniformly over the area."""
    if n < 0:
        raise InvalidArgument("AP count must be non-negative")
    rng = np.random.default_rng(seed)
    xs = rng.uniform(0.0, area.width, size=n)
    ys = rng.uniform(0.0, area.height, size=n)
    return Deployment(tuple(Location(float(x), float(y)) for x, y in zip(xs, ys)), int(seed))


def _cell_centers(count: int, spacing: float, side: float) -> np.ndarray:
    # the last cell is partial when spacing does not divide the side
    starts = np.arange(count) * spacing
    return 0.5 * (starts + np.minimum(starts + spacing, side))


def build_grid(area: ServiceArea, spacing: float) -> EvaluationGrid:
    if not spacing > 0:
        raise InvalidArgument(f"grid spacing must be positive, got {spacing}")
    if spacing > min(area.width, area.height):
        raise InvalidArgument("grid spacing exceeds the shorter side of the area")
    nx = math.ceil(area.width / spacing - 1e-9)
    ny = math.ceil(area.height / spacing - 1e-9)
    xs = _cell_centers(nx, spacing, area.width)
    ys = _cell_centers(ny, spacing, area.height)
    gx, gy = np.meshgrid(xs, ys)
    coords = np.column_stack([gx.ravel(), gy.ravel()])
    return EvaluationGrid(area=area, spacing=float(spacing), nx=nx, ny=ny, coords=coords)
