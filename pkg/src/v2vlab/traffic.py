"""Free-flow traffic model on a straight road.

Vehicles enter at position 0 as a Poisson process in time and keep an
i.i.d. truncated-normal speed.  At any instant the vehicle positions then
form a Poisson process in space whose rate is the arrival rate times the
mean reciprocal speed; that spatial rate is what the connectivity
analytics consume.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _core
from .errors import DomainError
from .quadrature import integrate


@dataclass(frozen=True)
class TrafficParams:
    """Arrival-rate and speed-distribution parameters.

    lambda_a -- vehicle arrival rate at the road entry (vehicles/second)
    v_min, v_max -- hard speed bounds (m/s)
    mu, sigma -- location and scale of the underlying normal speed law (m/s)
    """

    lambda_a: float
    v_min: float
    v_max: float
    mu: float
    sigma: float

    def __post_init__(self):
        if not (0.0 < self.v_min < self.v_max):
            raise DomainError("require 0 < v_min < v_max")
        if not self.sigma > 0.0:
            raise DomainError("require sigma > 0")
        if not self.lambda_a > 0.0:
            raise DomainError("require lambda_a > 0")
        if not math.isfinite(self.mu):
            raise DomainError("mu must be finite")
        if not (self.v_min <= self.mu <= self.v_max):
            warnings.warn(
                f"mu={self.mu} lies outside [v_min, v_max]=[{self.v_min}, {self.v_max}]; "
                "the truncated speed law is heavily one-sided",
                stacklevel=2,
            )

    def speed_distribution(self):
        return TruncatedNormal(self.mu, self.sigma, self.v_min, self.v_max)


@dataclass(frozen=True)
class TruncatedNormal:
    """Normal law restricted to [v_min, v_max], renormalized to mass one."""

    mu: float
    sigma: float
    v_min: float
    v_max: float
    normalizer: float = field(init=False)

    def __post_init__(self):
        if not (self.v_min < self.v_max):
            raise DomainError("require v_min < v_max")
        if not self.sigma > 0.0:
            raise DomainError("require sigma > 0")
        sqrt2 = math.sqrt(2.0)
        z = math.erf((self.v_max - self.mu) / (self.sigma * sqrt2)) - math.erf(
            (self.v_min - self.mu) / (self.sigma * sqrt2)
        )
        if z <= 0.0:
            raise DomainError("speed bounds carry no probability mass")
        object.__setattr__(self, "normalizer", z)


def truncated_normal_pdf(v, dist):
    """Density of the truncated speed law at ``v`` (zero outside the bounds).

    The Gaussian kernel carries a factor 2 against the erf-difference
    normalizer; the pair integrates to exactly one over the support.
    """
    if v < dist.v_min or v > dist.v_max:
        return 0.0
    z = (v - dist.mu) / dist.sigma
    return (2.0 / (dist.sigma * math.sqrt(2.0 * math.pi))) * math.exp(-0.5 * z * z) / dist.normalizer


def spatial_rate(params, rel_tol=1e-10, max_subdivisions=10_000):
    """Spatial vehicle rate (vehicles/m) implied by arrivals and speeds.

    Computes ``lambda_a * E[1/V]`` by adaptive quadrature of the
    reciprocal-speed-weighted density.  Raises
    :class:`~v2vlab.errors.NonConvergenceError` when the subdivision budget
    is exhausted before reaching ``rel_tol``.
    """
    dist = params.speed_distribution()

    def integrand(v):
        return truncated_normal_pdf(v, dist) / v

    # seed the mesh around the density peak so a narrow speed spread
    # cannot hide between the rule's sample points
    marks = [params.mu + j * params.sigma for j in (-8, -4, -2, -1, 0, 1, 2, 4, 8)]
    value = params.lambda_a * integrate(
        integrand, dist.v_min, dist.v_max,
        rel_tol=rel_tol, max_subdivisions=max_subdivisions,
        breakpoints=marks,
    )
    if not value > 0.0:
        raise DomainError(f"spatial rate came out non-positive ({value!r})")
    return value


def sample_speed(dist, rng):
    """One truncated-normal speed draw from the given RNG stream."""
    return rng.trunc_normal(dist.mu, dist.sigma, dist.v_min, dist.v_max)


@dataclass(frozen=True)
class RoadSnapshot:
    """Instantaneous road state: sorted positions with matching speeds.

    ``rsu_position`` defaults to the road end; positions are strictly
    increasing and live in [0, road_length].
    """

    positions: np.ndarray
    speeds: np.ndarray
    road_length: float
    rsu_position: float = None

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        spd = np.asarray(self.speeds, dtype=float)
        if pos.shape != spd.shape or pos.ndim != 1:
            raise DomainError("positions and speeds must be 1-D arrays of equal length")
        if pos.size and (np.any(np.diff(pos) <= 0.0)):
            raise DomainError("positions must be strictly increasing")
        if pos.size and (pos[0] < 0.0 or pos[-1] > self.road_length):
            raise DomainError("positions must lie in [0, road_length]")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "speeds", spd)
        if self.rsu_position is None:
            object.__setattr__(self, "rsu_position", float(self.road_length))

    @property
    def vehicle_count(self):
        return int(self.positions.size)


def generate_snapshot(lam, road_length, dist, rng):
    """Poisson road realization: exponential gaps from 0, i.i.d. speeds.

    ``lam`` is the spatial rate (vehicles/m).  An empty road is a valid
    snapshot when the first gap already exceeds ``road_length``.
    """
    if not lam > 0.0:
        raise DomainError("require lam > 0")
    if not road_length > 0.0:
        raise DomainError("require road_length > 0")
    pos, spd = _core.generate_road(
        lam, road_length, dist.mu, dist.sigma, dist.v_min, dist.v_max, rng
    )
    return RoadSnapshot(np.array(pos, dtype=float), np.array(spd, dtype=float), road_length)


def advance(snapshot, dt, traffic, rng):
    """Move every vehicle by ``speed * dt``; remove exits; re-inject arrivals.

    Arrivals within the step enter at position 0 and drift to
    ``(dt - t_arrival) * speed``, keeping the long-run density stationary at
    ``lambda_a * E[1/V]``.  Returns a new snapshot; the input is unchanged.
    """
    if not dt > 0.0:
        raise DomainError("require dt > 0")
    pos = list(snapshot.positions)
    spd = list(snapshot.speeds)
    ids = list(range(len(pos)))
    _core.advance_road(
        pos, spd, ids, snapshot.road_length, dt,
        traffic.lambda_a, traffic.mu, traffic.sigma, traffic.v_min, traffic.v_max,
        rng, len(pos),
    )
    return RoadSnapshot(
        np.array(pos, dtype=float), np.array(spd, dtype=float),
        snapshot.road_length, snapshot.rsu_position,
    )
