"""Harness tests: aggregation, determinism, persistence, sweep tables."""

import json
import math
from dataclasses import replace

import numpy as np
import pytest

from v2vlab import _core
from v2vlab.connectivity import expected_component_size, ConnectivityParams
from v2vlab.errors import (
    ConfigValidationError,
    InsufficientDeadEndsError,
)
from v2vlab.experiments import (
    ExperimentConfig,
    ExperimentResult,
    Table,
    monte_carlo,
    persist,
    run_fig3,
    run_fig4,
    summarize,
)
from v2vlab.routing import D2DOnDemand, DelayModel, Scenario
from v2vlab.traffic import TrafficParams

TP = TrafficParams(lambda_a=0.5, v_min=20.0, v_max=30.0, mu=25.0, sigma=5.0)
NARROW = TrafficParams(lambda_a=0.25, v_min=24.99, v_max=25.01, mu=25.0, sigma=1e-4)


def small_config(**kw):
    base = dict(
        traffic=NARROW,
        ranges_m=(150.0,),
        road_lengths_m=(4000.0,),
        strategies=("backtrack", "d2d_on_demand", "d2d_proactive"),
        cr_factors=(3.0, 4.0),
        replications=300,
        master_seed=20260809,
        delay_model=DelayModel(),
        output_dir="out",
        workers=1,
        carry_budget_s=20.0,
    )
    base.update(kw)
    return ExperimentConfig(**base)


def test_summarize_basics():
    m = summarize([1.0, 2.0, 3.0, 4.0])
    assert m.mean == 2.5 and m.n == 4
    assert m.std == pytest.approx(np.std([1, 2, 3, 4], ddof=1))
    assert m.ci95 is not None and m.ci99 > m.ci95
    single = summarize([7.0])
    assert single.mean == 7.0 and single.ci95 is None and single.ci99 is None


def test_summarize_student_t_below_30():
    from scipy import stats as sstats

    small = summarize(list(range(10)))
    crit_t = float(sstats.t.ppf(0.975, 9))
    assert small.ci95 == pytest.approx(crit_t * small.std / math.sqrt(10), rel=1e-12)
    big = summarize(list(range(60)))
    crit_n = float(sstats.norm.ppf(0.975))
    assert big.ci95 == pytest.approx(crit_n * big.std / math.sqrt(60), rel=1e-12)


def test_monte_carlo_determinism_and_single_rep():
    sc = Scenario(traffic=TP, tx_range=200.0, road_length=3000.0,
                  spatial_rate_override=0.015)
    a = monte_carlo(sc, D2DOnDemand(), 50, 777)
    b = monte_carlo(sc, D2DOnDemand(), 50, 777)
    assert a == b
    one = monte_carlo(sc, D2DOnDemand(), 1, 777)
    assert one["total_delay"].ci95 is None


def test_monte_carlo_parallel_invariance():
    sc = Scenario(traffic=TP, tx_range=200.0, road_length=3000.0,
                  spatial_rate_override=0.015)
    seq = monte_carlo(sc, D2DOnDemand(), 60, 31337, workers=1)
    par = monte_carlo(sc, D2DOnDemand(), 60, 31337, workers=4)
    assert seq == par  # bit-identical aggregation regardless of worker count


def test_persist_round_trip(tmp_path):
    cfg = small_config(output_dir=str(tmp_path / "a"))
    table = Table("demo", ["x", "y"])
    table.add(1.0, 2.0)
    table.add(float("nan"), None)
    result = ExperimentResult(tables=[table], config=cfg, extras={"k": 1})
    persist(result, tmp_path / "a")
    persist(result, tmp_path / "b")
    csv_a = (tmp_path / "a" / "demo.csv").read_bytes()
    csv_b = (tmp_path / "b" / "demo.csv").read_bytes()
    assert csv_a == csv_b
    assert csv_a.decode().splitlines()[0] == "x,y"
    assert "n/a" in csv_a.decode()
    # JSON summary reproduces the config exactly
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert ExperimentConfig.from_dict(summary["config"]) == cfg
    assert summary["master_seed"] == cfg.master_seed
    assert summary["schema_version"] == 1
    # MANIFEST digests match files on disk
    import hashlib

    for line in (tmp_path / "a" / "MANIFEST").read_text().splitlines():
        digest, name = line.split("  ")
        assert hashlib.sha256((tmp_path / "a" / name).read_bytes()).hexdigest() == digest


def test_persist_bad_directory(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        persist(Table("t", ["a"]), blocker / "sub")


def test_persist_bare_stats(tmp_path):
    sc = Scenario(traffic=TP, tx_range=200.0, road_length=2000.0,
                  spatial_rate_override=0.02)
    stats = monte_carlo(sc, D2DOnDemand(), 5, 123)
    persist(stats, tmp_path)
    text = (tmp_path / "stats.csv").read_text()
    assert text.splitlines()[0] == "metric,mean,std,n,ci95,ci99"
    assert "total_delay" in text


def test_no_empty_cells_anywhere(tmp_path):
    cfg = small_config(ranges_m=(60.0, 200.0), replications=120)
    persist(run_fig3(cfg), tmp_path)
    for line in (tmp_path / "fig3.csv").read_text().splitlines():
        assert "" not in line.split(",")


def test_config_closure_reexecution(tmp_path):
    # the JSON summary alone is enough to reproduce a sweep byte for byte
    cfg = small_config(ranges_m=(200.0,), road_lengths_m=(3000.0,),
                       replications=60, output_dir=str(tmp_path / "a"))
    persist(run_fig3(cfg), tmp_path / "a")
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    cfg2 = ExperimentConfig.from_dict(summary["config"])
    persist(run_fig3(cfg2), tmp_path / "b")
    assert (tmp_path / "a" / "fig3.csv").read_bytes() == (
        tmp_path / "b" / "fig3.csv"
    ).read_bytes()


def test_ci_coverage_against_size_formula():
    # 95% CIs from repeated component-extent experiments should cover the
    # closed-form mean about 95% of the time
    from scipy import stats as sstats

    params = ConnectivityParams(lam=0.01, range_m=200.0)
    truth = expected_component_size(params)
    n_exp, n_per = 200, 400
    covered = 0
    crit = float(sstats.norm.ppf(0.975))
    for i in range(n_exp):
        seed = _core.derive_seed(909, i)
        total, total_sq = _core.sample_component_extents(0.01, 200.0, n_per, seed)
        mean = total / n_per
        var = (total_sq - n_per * mean * mean) / (n_per - 1)
        half = crit * math.sqrt(var / n_per)
        covered += abs(mean - truth) <= half
    assert 0.91 <= covered / n_exp <= 0.99


def test_run_fig3_table_and_determinism(tmp_path):
    cfg = small_config(
        ranges_m=(60.0, 200.0), road_lengths_m=(3000.0, 6000.0), replications=150
    )
    result = run_fig3(cfg)
    t = result.tables[0]
    assert t.columns[0] == "R_m" and t.columns[-1] == "status"
    assert len(t.rows) == 4
    by_status = dict(zip(t.column("R_m"), t.column("status")))
    assert by_status[60.0] == "simulate_only"  # lam' = 0.6 below the threshold
    for row in t.rows:
        status = row[-1]
        if status == "simulate_only":
            assert row[t.columns.index("analytic_hops")] is None
            assert row[t.columns.index("sim_hops_mean")] is not None
        assert all(c is not None or status != "pass" for c in row[:4])
    # L-doubling doubles the analytic hop count exactly
    hops = {
        (r[0], r[1]): r[t.columns.index("analytic_hops")] for r in t.rows
    }
    assert hops[(200.0, 6000.0)] == pytest.approx(2 * hops[(200.0, 3000.0)], rel=1e-12)
    # byte-identical CSVs on re-run
    persist(result, tmp_path / "x")
    persist(run_fig3(cfg), tmp_path / "y")
    assert (tmp_path / "x" / "fig3.csv").read_bytes() == (
        tmp_path / "y" / "fig3.csv"
    ).read_bytes()


def test_run_fig3_worker_invariance():
    cfg = small_config(ranges_m=(100.0,), road_lengths_m=(3000.0,), replications=80)
    a = run_fig3(cfg)
    b = run_fig3(replace(cfg, workers=4))
    assert a.tables[0].rows == b.tables[0].rows


def test_run_fig4_tables_and_pairings():
    cfg = small_config(ranges_m=(150.0,), replications=300)
    result = run_fig4(cfg)
    fig4, headline = result.tables
    assert fig4.name == "fig4" and headline.name == "fig4_headline"
    # backtrack row plus 2 strategies x 2 factors
    assert len(fig4.rows) == 5
    strategies = fig4.column("strategy")
    assert strategies.count("backtrack") == 1
    # cr_factor present for D2D rows, absent only for the baseline
    for row in fig4.rows:
        if row[0] == "backtrack":
            assert row[1] is None
        else:
            assert row[1] in (3.0, 4.0)
    assert len(headline.rows) == 4
    for row in headline.rows:
        assert row[-1] is True  # d2d faster at 99% in this regime
    for rec in result.extras["pairings"]:
        if "violations" in rec:
            assert rec["violations"] == 0
        if "delivery_superset_violations" in rec:
            assert rec["delivery_superset_violations"] == 0


def test_run_fig4_insufficient_deadends():
    cfg = small_config(ranges_m=(150.0,), replications=50)
    with pytest.raises(InsufficientDeadEndsError):
        run_fig4(cfg)


def test_run_fig4_deadend_floor_precheck():
    dense = TrafficParams(lambda_a=1.0, v_min=24.99, v_max=25.01, mu=25.0, sigma=1e-4)
    cfg = small_config(traffic=dense, ranges_m=(500.0,), road_lengths_m=(2000.0,))
    with pytest.raises(ConfigValidationError):
        run_fig4(cfg)


def test_config_validation():
    with pytest.raises(ConfigValidationError):
        small_config(replications=0)
    with pytest.raises(ConfigValidationError):
        small_config(strategies=("teleport",))
    with pytest.raises(ConfigValidationError):
        small_config(ranges_m=())
