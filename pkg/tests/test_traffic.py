"""Traffic-model tests: speed law, spatial rate, snapshots, mobility."""

import math

import numpy as np
import pytest
from scipy import integrate as sintegrate
from scipy import stats as sstats

from v2vlab import _core
from v2vlab.errors import DomainError, NonConvergenceError
from v2vlab.traffic import (
    RoadSnapshot,
    TrafficParams,
    TruncatedNormal,
    advance,
    generate_snapshot,
    sample_speed,
    spatial_rate,
    truncated_normal_pdf,
)

TP = TrafficParams(lambda_a=0.5, v_min=20.0, v_max=30.0, mu=25.0, sigma=5.0)
DIST = TP.speed_distribution()


def test_params_validation():
    with pytest.raises(DomainError):
        TrafficParams(lambda_a=0.5, v_min=-1.0, v_max=30.0, mu=25.0, sigma=5.0)
    with pytest.raises(DomainError):
        TrafficParams(lambda_a=0.5, v_min=20.0, v_max=10.0, mu=25.0, sigma=5.0)
    with pytest.raises(DomainError):
        TrafficParams(lambda_a=0.5, v_min=20.0, v_max=30.0, mu=25.0, sigma=-5.0)
    with pytest.raises(DomainError):
        TrafficParams(lambda_a=0.0, v_min=20.0, v_max=30.0, mu=25.0, sigma=5.0)
    with pytest.warns(UserWarning):
        TrafficParams(lambda_a=0.5, v_min=20.0, v_max=30.0, mu=45.0, sigma=5.0)


def test_pdf_support_and_peak():
    assert truncated_normal_pdf(19.999, DIST) == 0.0
    assert truncated_normal_pdf(30.001, DIST) == 0.0
    grid = np.linspace(20.0, 30.0, 2001)
    values = [truncated_normal_pdf(v, DIST) for v in grid]
    assert all(v >= 0.0 for v in values)
    # symmetric bounds around mu put the maximum at mu
    assert max(values) == truncated_normal_pdf(25.0, DIST)


def test_pdf_normalization():
    # independent quadrature oracle on the implementation's own pdf
    total, err = sintegrate.quad(
        lambda v: truncated_normal_pdf(v, DIST), 20.0, 30.0,
        epsabs=1e-13, epsrel=1e-13,
    )
    assert abs(total - 1.0) <= 1e-9
    # same for asymmetric bounds
    d2 = TruncatedNormal(mu=22.0, sigma=3.0, v_min=18.0, v_max=36.0)
    total2, _ = sintegrate.quad(
        lambda v: truncated_normal_pdf(v, d2), 18.0, 36.0, epsabs=1e-13, epsrel=1e-13
    )
    assert abs(total2 - 1.0) <= 1e-9


def test_spatial_rate_degenerate_sigma():
    tp = TrafficParams(lambda_a=0.5, v_min=24.9, v_max=25.1, mu=25.0, sigma=1e-4)
    lam = spatial_rate(tp)
    assert abs(lam - 0.5 / 25.0) <= 1e-6


def test_spatial_rate_linear_in_lambda_a():
    tp2 = TrafficParams(lambda_a=1.0, v_min=20.0, v_max=30.0, mu=25.0, sigma=5.0)
    assert spatial_rate(tp2) == pytest.approx(2.0 * spatial_rate(TP), rel=1e-12)


def test_spatial_rate_monte_carlo_oracle():
    # E[1/V] against 1e7 truncated-normal samples
    a = (20.0 - 25.0) / 5.0
    b = (30.0 - 25.0) / 5.0
    rv = sstats.truncnorm(a, b, loc=25.0, scale=5.0)
    samples = rv.rvs(size=10_000_000, random_state=np.random.default_rng(101))
    inv = 1.0 / samples
    mean = float(inv.mean())
    se = float(inv.std(ddof=1)) / math.sqrt(inv.size)
    lam = spatial_rate(TP)
    assert abs(lam - 0.5 * mean) <= 3.0 * 0.5 * se


def test_spatial_rate_monotone_in_mu():
    rates = []
    for mu in np.linspace(20.0, 30.0, 11):
        tp = TrafficParams(lambda_a=0.5, v_min=5.0, v_max=45.0, mu=float(mu), sigma=1e-3)
        rates.append(spatial_rate(tp))
    assert all(a > b for a, b in zip(rates, rates[1:]))


def test_spatial_rate_budget_error():
    with pytest.raises(NonConvergenceError):
        spatial_rate(TP, rel_tol=0.0, max_subdivisions=0)


def test_sample_speed_support_and_moments():
    rng = _core.Rng(_core.derive_seed(2024, 0))
    n = 1_000_000
    samples = np.array([sample_speed(DIST, rng) for _ in range(n)])
    assert samples.min() >= 20.0 and samples.max() <= 30.0
    a, b = (20.0 - 25.0) / 5.0, (30.0 - 25.0) / 5.0
    rv = sstats.truncnorm(a, b, loc=25.0, scale=5.0)
    se_mean = samples.std(ddof=1) / math.sqrt(n)
    assert abs(samples.mean() - rv.mean()) <= 3.0 * se_mean
    m2 = samples.var(ddof=1)
    m4 = float(((samples - samples.mean()) ** 4).mean())
    se_var = math.sqrt((m4 - m2 * m2) / n)
    assert abs(m2 - rv.var()) <= 3.0 * se_var


def test_sample_speed_degenerate():
    dist = TruncatedNormal(mu=25.0, sigma=1e-4, v_min=24.999, v_max=25.001)
    rng = _core.Rng(7)
    for _ in range(1000):
        assert abs(sample_speed(dist, rng) - 25.0) < 1e-3


def test_snapshot_positions_strictly_increasing():
    rng = _core.Rng(_core.derive_seed(11, 0))
    for _ in range(200):
        snap = generate_snapshot(0.02, 2000.0, DIST, rng)
        if snap.vehicle_count > 1:
            assert np.all(np.diff(snap.positions) > 0.0)
        assert np.all(snap.speeds >= 20.0) and np.all(snap.speeds <= 30.0)


def test_snapshot_poisson_count():
    rng = _core.Rng(_core.derive_seed(12, 0))
    lam, length = 0.02, 10_000.0
    n_snapshots = 10_000
    counts = np.empty(n_snapshots)
    for i in range(n_snapshots):
        pos, _ = _core.generate_road(lam, length, 25.0, 5.0, 20.0, 30.0, rng)
        counts[i] = len(pos)
    expected = lam * length
    tol = 3.0 * math.sqrt(expected) / math.sqrt(n_snapshots)
    assert abs(counts.mean() - expected) <= tol


def test_snapshot_empty_road_valid():
    # first gap beyond the road end leaves an empty, valid snapshot
    rng = _core.Rng(3)
    snap = generate_snapshot(1e-6, 1.0, DIST, rng)
    assert snap.vehicle_count == 0


def test_gap_distribution_ks():
    rng = _core.Rng(_core.derive_seed(13, 0))
    lam = 0.02
    pos, _ = _core.generate_road(lam, 6_000_000.0, 25.0, 5.0, 20.0, 30.0, rng)
    pos = np.asarray(pos)
    gaps = np.diff(np.concatenate(([0.0], pos)))[:100_000]
    assert gaps.size == 100_000
    result = sstats.kstest(gaps, "expon", args=(0.0, 1.0 / lam))
    assert result.pvalue > 0.01


def test_advance_kinematics_and_exit():
    tp = TrafficParams(lambda_a=1e-12, v_min=20.0, v_max=30.0, mu=25.0, sigma=5.0)
    snap = RoadSnapshot(np.array([100.0]), np.array([25.0]), 1000.0)
    rng = _core.Rng(5)
    moved = advance(snap, 1.0, tp, rng)
    assert moved.positions.tolist() == [125.0]
    near_exit = RoadSnapshot(np.array([999.0]), np.array([25.0]), 1000.0)
    gone = advance(near_exit, 1.0, tp, rng)
    assert gone.vehicle_count == 0
    with pytest.raises(DomainError):
        advance(snap, 0.0, tp, rng)


def test_advance_stationary_density():
    tp = TrafficParams(lambda_a=0.5, v_min=24.5, v_max=25.5, mu=25.0, sigma=0.2)
    lam = 0.5 / 25.0
    length = 10_000.0
    rng = _core.Rng(_core.derive_seed(14, 0))
    snap = generate_snapshot(lam, length, tp.speed_distribution(), rng)
    counts = []
    for _ in range(2000):
        snap = advance(snap, 5.0, tp, rng)
        counts.append(snap.vehicle_count)
    mean = float(np.mean(counts))
    assert abs(mean - lam * length) <= 0.05 * lam * length


def test_snapshot_validation():
    with pytest.raises(DomainError):
        RoadSnapshot(np.array([3.0, 2.0]), np.array([25.0, 25.0]), 10.0)
    with pytest.raises(DomainError):
        RoadSnapshot(np.array([3.0, 20.0]), np.array([25.0, 25.0]), 10.0)
