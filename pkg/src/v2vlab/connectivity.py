"""Connected-component analytics for greedy forwarding on a Poisson road.

With vehicles at spatial rate ``lam`` and radio range ``range_m``, greedy
forwarding samples the farthest vehicle in range at each step.  The hop
lengths form a Markov chain whose termination (no vehicle in range) ends a
component.  This module provides:

* the hop-length kernel (conditional CDF / density / termination mass),
* the component-size PMF by three routes: a nested-integral oracle
  (discretized kernel iteration), coefficient extraction from a
  closed-form generating function, and the independent-gap geometric
  baseline,
* the derived expectations: retransmitter count per component, component
  coverage size, hop count over a road, and a density-aware delay figure.

The closed-form generating function is obtained by solving the kernel's
boundary-value problem: writing the component-size transform as an
integral over the first hop turns the defective kernel into a linear
second-order ODE with a reflected argument, whose characteristic roots are
``(lam*R/2) * (-1 ± sqrt(1 - 4*rho'*z**2))``.  Solving with the two
boundary conditions gives

    Q(z) = 1 + 2*rho'*(z-1) * (z*(E**2 - rho') + s*E)
               / ((1+s)*rho' - (1-s)*E**2)

with ``s = sqrt(1 - 4*rho'*z**2)`` (principal branch) and
``E = exp((lam*R/2)*(s-1))``.  The branch point sits at
``1/(2*sqrt(rho'))``, which stays outside the closed unit disk exactly
when ``lam*R >= ln 4`` -- the validity region enforced below.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AliasingError,
    DerivativeInstabilityError,
    DomainError,
    NonConvergenceError,
    OutOfRangeError,
    SingularityError,
    ValidityError,
)

LN4 = math.log(4.0)
DEFAULT_MARGIN = 0.05
_ORACLE_GRID_DEFAULT = 2000


@dataclass(frozen=True)
class ConnectivityParams:
    """Spatial rate (vehicles/m) and radio range (m) with derived shorthands."""

    lam: float
    range_m: float

    def __post_init__(self):
        if not self.lam > 0.0:
            raise DomainError("require lam > 0")
        if not self.range_m > 0.0:
            raise DomainError("require range_m > 0")

    @property
    def lam_prime(self):
        """Dimensionless density-range product."""
        return self.lam * self.range_m

    @property
    def rho_prime(self):
        """Termination mass of a fresh relay: exp(-lam*R)."""
        return math.exp(-self.lam_prime)

    @property
    def rho(self):
        """lam*R * exp(-lam*R); equals P(component has exactly 2 relays)."""
        return self.lam_prime * self.rho_prime

    def require_closed_form(self, margin=DEFAULT_MARGIN):
        if self.lam_prime < LN4 + margin:
            raise ValidityError(
                f"closed-form transform needs lam*R >= ln(4)+{margin:g} "
                f"= {LN4 + margin:.6f}; got {self.lam_prime:.6f}"
            )


@dataclass(frozen=True)
class TransformValue:
    """A generating-function evaluation point and its value."""

    z: complex
    value: complex

    def require_real(self, tol=1e-12):
        if abs(self.value.imag) > tol:
            raise DomainError(
                f"transform value at z={self.z} has imaginary residue {self.value.imag:.3e}"
            )
        return self.value.real


@dataclass
class ComponentDistribution:
    """PMF of the per-component retransmitter count for k = 1..k_max."""

    pmf: np.ndarray
    tail_mass: float
    method: str

    def prob(self, k):
        if k < 1:
            raise DomainError("component size starts at k = 1")
        if k > len(self.pmf):
            return 0.0
        return float(self.pmf[k - 1])

    @property
    def k_max(self):
        return len(self.pmf)

    def validate(self, tol=1e-9, tail_tol=1e-6):
        """Check PMF sanity: entries in [0,1], sum+tail == 1, tail >= 0.

        ``tail_tol`` allows the tiny negative tail a discretized oracle can
        produce when its summed PMF overshoots one by its grid error.
        """
        if np.any(self.pmf < -tol) or np.any(self.pmf > 1.0 + tol):
            raise DomainError("PMF entries escape [0, 1]")
        total = float(self.pmf.sum()) + self.tail_mass
        if abs(total - 1.0) > tol:
            raise DomainError(f"PMF plus tail sums to {total}, not 1")
        if self.tail_mass < -tail_tol:
            raise DomainError(f"negative tail mass {self.tail_mass}")
        return self

    def mean(self):
        k = np.arange(1, len(self.pmf) + 1)
        return float((k * self.pmf).sum())


# ---------------------------------------------------------------------------
# hop-length kernel


def hop_distance_cdf(x_n, x_prev, params):
    """Conditional CDF of the next hop length given the previous one.

    The distribution is defective: its total mass is ``1 - exp(-lam*x_prev)``
    and the deficit is the probability that the component terminates.  The
    initial hop uses ``x_prev = range_m``.
    """
    r = params.range_m
    lam = params.lam
    if not (0.0 <= x_prev <= r):
        raise DomainError(f"x_prev={x_prev} outside [0, {r}]")
    if x_n < r - x_prev:
        return 0.0
    value = math.exp(-lam * (r - x_n)) - math.exp(-lam * x_prev)
    top = 1.0 - math.exp(-lam * x_prev)
    if value < 0.0:
        return 0.0
    if value > top:
        return top
    return value


@dataclass(frozen=True)
class HopKernel:
    """Hop-length Markov kernel helpers built on a parameter set."""

    params: ConnectivityParams

    def cdf(self, x_n, x_prev):
        return hop_distance_cdf(x_n, x_prev, self.params)

    def conditional_density(self, x, x_prev):
        """Defective density lam*exp(-lam*(R-x)) on [R - x_prev, R]."""
        r = self.params.range_m
        lam = self.params.lam
        if not (0.0 <= x_prev <= r):
            raise DomainError(f"x_prev={x_prev} outside [0, {r}]")
        if x < r - x_prev or x > r:
            return 0.0
        return lam * math.exp(-lam * (r - x))

    def termination_probability(self, x_prev):
        """Chance that no vehicle sits within range of the current relay."""
        r = self.params.range_m
        if not (0.0 <= x_prev <= r):
            raise DomainError(f"x_prev={x_prev} outside [0, {r}]")
        return math.exp(-self.params.lam * x_prev)

    def sample_next(self, x_prev, rng):
        """Inverse-CDF draw of the next hop length given continuation."""
        r = self.params.range_m
        lam = self.params.lam
        lo = math.exp(-lam * x_prev)
        u = rng.uniform()
        # CDF conditioned on continuation: (e^{-lam(R-x)} - lo) / (1 - lo)
        return r + math.log(lo + u * (1.0 - lo)) / lam

    def sample_initial(self, rng):
        return self.sample_next(self.params.range_m, rng)


# ---------------------------------------------------------------------------
# nested-integral oracle


def _oracle_once(k_max, params, n):
    """Kernel iteration on an (n+1)-point trapezoidal grid over [0, R]."""
    r = params.range_m
    lam = params.lam
    h = r / n
    x = np.linspace(0.0, r, n + 1)
    base = lam * np.exp(-lam * (r - x))  # first-hop density; also the kernel profile
    term = np.exp(-lam * x)              # termination weight
    pmf = np.empty(k_max)
    pmf[0] = params.rho_prime
    f = base.copy()
    for k in range(2, k_max + 1):
        pmf[k - 1] = float(np.trapezoid(f * term, dx=h))
        # suffix integrals S[m] = integral of f over [x_m, R]
        inc = (f[1:] + f[:-1]) * (0.5 * h)
        cs = np.concatenate(([0.0], np.cumsum(inc)))
        suffix = cs[-1] - cs
        # next iterate: f(x) = base(x) * S(R - x); the grid is reflection-closed
        f = base * suffix[::-1]
    return pmf


def component_pmf_oracle(k_max, params, grid_size=_ORACLE_GRID_DEFAULT, tol=1e-6):
    """Component-size PMF from discretized iteration of the hop kernel.

    Valid for every parameter set (no density restriction).  The result is
    computed on ``grid_size`` and ``2 * grid_size`` trapezoidal grids;
    disagreement beyond ``tol`` raises
    :class:`~v2vlab.errors.NonConvergenceError`.  The finer grid is returned.
    """
    if k_max < 1:
        raise DomainError("require k_max >= 1")
    if grid_size < 100:
        raise DomainError("require grid_size >= 100")
    coarse = _oracle_once(k_max, params, grid_size)
    fine = _oracle_once(k_max, params, 2 * grid_size)
    worst = float(np.max(np.abs(coarse - fine))) if k_max else 0.0
    if worst > tol:
        raise NonConvergenceError(
            f"oracle PMF moved by {worst:.3e} under grid doubling (tol {tol:g})"
        )
    # the trapezoid error is O(h^2), so the two grids extrapolate cleanly
    pmf = (4.0 * fine - coarse) / 3.0
    tail = 1.0 - float(pmf.sum())
    return ComponentDistribution(pmf=pmf, tail_mass=tail, method="oracle").validate()


def m1_series(k_max, params, grid_size=_ORACLE_GRID_DEFAULT):
    """Tail coefficients of the component-size law: index k holds P(N=k+2)/rho.

    Returned as an array over k = 0..k_max; the k = 0 entry equals 1
    exactly because P(N=2) = rho.
    """
    dist = component_pmf_oracle(k_max + 2, params, grid_size=grid_size)
    rho = params.rho
    out = dist.pmf[1:] / rho
    if np.any(out < -1e-12):
        raise NonConvergenceError("negative tail coefficient from the oracle")
    return out


# ---------------------------------------------------------------------------
# closed-form transform


def _sE(z, lam_prime, rho_prime):
    s = cmath.sqrt(1.0 - 4.0 * rho_prime * z * z)
    e = cmath.exp(0.5 * lam_prime * (s - 1.0))
    return s, e


def _q_closed_raw(z, params):
    """Closed-form component-size generating function (see module docstring)."""
    lp = params.lam_prime
    rp = params.rho_prime
    s, e = _sE(z, lp, rp)
    e2 = e * e
    den = (1.0 + s) * rp - (1.0 - s) * e2
    if abs(den) < 1e-12:
        raise SingularityError(f"transform denominator vanished at z={z}")
    return 1.0 + 2.0 * rp * (z - 1.0) * (z * (e2 - rp) + s * e) / den


def _m1_small_z(z, params):
    """Cubic Taylor start of the tail transform (stable near z = 0)."""
    a = params.lam_prime
    ea = math.exp(a)
    ena = params.rho_prime  # exp(-a)
    m1 = ((a - 1.0) * ea + 1.0) * ena / a
    m2 = (2.0 * a * ea - 2.0 * ea + 2.0 - a * a) * ena / (2.0 * a)
    m3 = (
        (2.0 * a * ea * ea - 3.0 * a * a * ea + 4.0 * a * ea - 2.0 * ea * ea - 2.0 * ea + 4.0)
        * ena * ena / (2.0 * a)
    )
    return z * (m1 + z * (m2 + z * m3))


def m1_closed(z, params, margin=DEFAULT_MARGIN):
    """Closed-form tail transform: sum of P(N=k+2)/rho * z**k over k >= 1.

    Requires the density-range product to exceed ln(4) by ``margin`` so the
    branch point of the radical stays outside the unit disk.  The removable
    z = 0 point returns 0; small |z| uses a local series to dodge
    cancellation.
    """
    params.require_closed_form(margin)
    z = complex(z)
    if abs(z) > 1.0 + 1e-12:
        raise DomainError("m1_closed is defined on |z| <= 1")
    if z == 0:
        return 0j
    if abs(z) < 1e-2:
        return complex(_m1_small_z(z, params))
    q = _q_closed_raw(z, params)
    rp = params.rho_prime
    rho = params.rho
    return (q - rp * z - rho * z * z) / (rho * z * z)


def q_transform(z, params, margin=DEFAULT_MARGIN):
    """Component-size generating function: rho'*z + rho*z**2*(1 + m1_closed(z)).

    The linear term carries the single-relay probability so that the result
    is a proper generating function of a count supported on {1, 2, ...}.
    """
    z = complex(z)
    return params.rho_prime * z + params.rho * z * z * (1.0 + m1_closed(z, params, margin))


def pmf_from_transform(k_max, params, margin=DEFAULT_MARGIN, radius=None, points=None):
    """Extract P(N=k) for k <= k_max from the closed-form transform.

    Evaluates the generating function on ``points`` equally spaced samples
    of a circle of radius ``radius`` (default 0.9, kept at least 0.05
    inside the branch point and below 0.95) and inverts with a discrete
    Fourier transform.  The geometric aliasing bound
    ``radius**points / (1 - radius)`` must stay below 1e-8.
    """
    if k_max < 1:
        raise DomainError("require k_max >= 1")
    params.require_closed_form(margin)
    z_star = 1.0 / (2.0 * math.sqrt(params.rho_prime))
    if radius is None:
        radius = min(0.9, z_star - 0.1)
    if not (0.0 < radius < min(0.95, z_star - 0.05)):
        raise DomainError(
            f"extraction radius {radius} outside (0, {min(0.95, z_star - 0.05):.4f})"
        )
    if points is None:
        points = max(4 * k_max, 256)
    if points < 4 * k_max:
        raise DomainError("need at least 4*k_max sample points")
    bound = radius ** points / (1.0 - radius)
    if bound > 1e-8:
        raise AliasingError(
            f"aliasing bound {bound:.3e} exceeds 1e-8; raise the point count"
        )
    j = np.arange(points)
    z = radius * np.exp(2j * np.pi * j / points)
    lp = params.lam_prime
    rp = params.rho_prime
    s = np.sqrt(1.0 - 4.0 * rp * z * z)
    e = np.exp(0.5 * lp * (s - 1.0))
    e2 = e * e
    den = (1.0 + s) * rp - (1.0 - s) * e2
    if np.min(np.abs(den)) < 1e-12:
        raise SingularityError("transform denominator vanished on the extraction circle")
    q = 1.0 + 2.0 * rp * (z - 1.0) * (z * (e2 - rp) + s * e) / den
    coeffs = np.fft.fft(q) / points
    k = np.arange(1, k_max + 1)
    pmf = (coeffs[1 : k_max + 1] / radius ** k).real
    tail = 1.0 - float(pmf.sum())
    return ComponentDistribution(pmf=pmf, tail_mass=tail, method="closed_form").validate()


def baseline_pmf_independent(k, params):
    """Geometric law from pretending successive gaps are independent.

    Expanding ``z*(1-F(R))/(1-z*F(R))`` with ``F(R) = 1 - exp(-lam*R)``
    gives ``F(R)**(k-1) * (1 - F(R))``.  This ignores the void left behind
    by farthest-in-range sampling, so it is kept only as a comparison
    baseline; it coincides with the Markov model at k = 1.
    """
    if k < 1:
        raise DomainError("require k >= 1")
    f = 1.0 - params.rho_prime
    return f ** (k - 1) * params.rho_prime


# ---------------------------------------------------------------------------
# derived expectations


def _series_mean(params, tail_target=1e-8, grid_size=_ORACLE_GRID_DEFAULT):
    """Mean component size from the oracle series, truncated at tiny tails."""
    k_max = 64
    while True:
        dist = component_pmf_oracle(k_max, params, grid_size=grid_size)
        pmf = dist.pmf
        # geometric tail estimate from the last two terms
        if pmf[-1] <= 0.0 or pmf[-2] <= 0.0:
            return dist.mean()
        ratio = pmf[-1] / pmf[-2]
        if ratio < 1.0:
            tail = pmf[-1] * ratio / (1.0 - ratio)
            if tail < tail_target:
                return dist.mean()
        if k_max >= 4096:
            raise NonConvergenceError(
                f"oracle series tail above {tail_target:g} even at k_max={k_max}"
            )
        k_max *= 2


def expected_retransmitters(params, margin=DEFAULT_MARGIN, step=1e-3, cross_validate=True):
    """Mean retransmitter count per component-size law (closed-form route).

    Differentiates the closed-form transform at z = 1 with one-sided
    second-order stencils plus Richardson extrapolation, then combines
    the value and slope of the tail transform.  Two Richardson levels must
    agree within 0.1%; with ``cross_validate`` the oracle-series mean must
    confirm the figure within 0.1% as well.
    """
    params.require_closed_form(margin)

    def m1(zz):
        return m1_closed(zz, params, margin).real

    m1_at_1 = m1(1.0)

    def one_sided(h):
        return (3.0 * m1_at_1 - 4.0 * m1(1.0 - h) + m1(1.0 - 2.0 * h)) / (2.0 * h)

    d_coarse = (4.0 * one_sided(step / 2.0) - one_sided(step)) / 3.0
    d_fine = (4.0 * one_sided(step / 4.0) - one_sided(step / 2.0)) / 3.0
    if abs(d_coarse - d_fine) > 1e-3 * abs(d_fine):
        raise DerivativeInstabilityError(
            f"Richardson derivative levels disagree: {d_coarse!r} vs {d_fine!r}"
        )
    rho = params.rho
    value = params.rho_prime + 2.0 * rho + 2.0 * rho * m1_at_1 + rho * d_fine
    if cross_validate:
        series = _series_mean(params)
        if abs(value - series) > 1e-3 * abs(series):
            raise DerivativeInstabilityError(
                f"closed-form mean {value:.8f} disagrees with oracle series {series:.8f}"
            )
    return value


def expected_component_size(params):
    """Mean coverage size of a component: (exp(lam*R) - 1) / lam (meters).

    This is the covered interval from the first relay to the end of the
    last relay's radio footprint, i.e. mean (last - first) plus one range.
    """
    lp = params.lam_prime
    if lp > 700.0:
        raise OutOfRangeError(f"exp({lp:g}) overflows a double; lam*R too large")
    return (math.exp(lp) - 1.0) / params.lam


def expected_hops_over_road(params, road_length, margin=DEFAULT_MARGIN, cross_validate=True):
    """Expected relay count over ``road_length`` meters of road.

    Scales the per-component relay count by the road length measured in
    component coverage sizes.
    """
    if not road_length > 0.0:
        raise DomainError("require road_length > 0")
    hops = expected_retransmitters(params, margin=margin, cross_validate=cross_validate)
    return hops / expected_component_size(params) * road_length


def analytic_delay(params, road_length, delay_model, margin=DEFAULT_MARGIN, cross_validate=True):
    """Expected end-to-end delay figure: hops times a density-aware hop cost.

    Each relay transmission costs the processing delay plus the access
    coefficient times ``2*lam*R`` (the expected neighbor count of a relay).
    """
    hops = expected_hops_over_road(params, road_length, margin=margin, cross_validate=cross_validate)
    per_hop = delay_model.t_proc + delay_model.t_access * (2.0 * params.lam_prime)
    return hops * per_hop
