"""Reproduction harness: parameter sweeps, aggregation, persistence.

Two headline sweeps:

* the analytic-versus-simulation comparison over (range, road length)
  cells, where the simulated hop and delay figures are measured per
  component and normalized by component coverage exactly like the analytic
  expressions (``run_fig3``);
* the recovery-strategy comparison on dead-end-rich scenarios with paired
  seeds (``run_fig4``).

All randomness flows from one master seed through a deterministic
derivation chain, and aggregation reduces over replications in index
order, so results are bit-identical regardless of worker count.
"""

import hashlib
import json
import math
import multiprocessing
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
from scipy import stats as _sstats

from . import __version__ as _pkg_version
from . import _core
from .connectivity import (
    ConnectivityParams,
    DEFAULT_MARGIN,
    LN4,
    analytic_delay,
    expected_hops_over_road,
)
from .errors import ConfigValidationError, DomainError, InsufficientDeadEndsError, V2VLabError
from .routing import (
    D2DOnDemand,
    D2DProactive,
    DelayModel,
    PureV2VBacktrack,
    Scenario,
    run_hybrid,
)
from .traffic import TrafficParams, spatial_rate

SCHEMA_VERSION = 1
FIG3_COLUMNS = [
    "R_m", "L_m", "lambda_per_m", "lambda_prime", "analytic_hops",
    "analytic_delay_s", "sim_hops_mean", "sim_hops_ci95", "sim_delay_mean_s",
    "sim_delay_ci95_s", "rel_dev_hops", "rel_dev_delay", "status",
]
FIG4_COLUMNS = [
    "strategy", "cr_factor", "R_m", "forward_hops_mean", "backward_hops_mean",
    "d2d_links_mean", "delay_mean_s", "delay_ci95_s", "delivery_rate",
    "deadend_rate",
]
FIG4_HEADLINE_COLUMNS = [
    "comparison", "R_m", "cr_factor", "n_deadend_reps", "d2d_delay_mean_s",
    "backtrack_delay_mean_s", "mean_diff_s", "t_stat", "t_crit_99",
    "d2d_faster_at_99",
]

METRICS = ("forward_hops", "backward_hops", "d2d_links", "total_delay", "delivered")


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved sweep description (see config.py for the file format)."""

    traffic: TrafficParams
    ranges_m: tuple
    road_lengths_m: tuple
    strategies: tuple
    cr_factors: tuple
    replications: int
    master_seed: int
    delay_model: DelayModel
    output_dir: str = "out"
    workers: int = 1
    closed_form_margin: float = DEFAULT_MARGIN
    deadend_floor: float = 0.5
    max_back_hops: int = 1
    carry_budget_s: float = 60.0

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigValidationError("replications", "must be >= 1")
        if self.workers < 1:
            raise ConfigValidationError("workers", "must be >= 1")
        if not (0 <= self.master_seed < 2 ** 64):
            raise ConfigValidationError("master_seed", "must fit in 64 bits")
        for name in ("ranges_m", "road_lengths_m", "cr_factors"):
            if not getattr(self, name):
                raise ConfigValidationError(name, "must not be empty")
        for s in self.strategies:
            if s not in ("backtrack", "d2d_on_demand", "d2d_proactive"):
                raise ConfigValidationError("strategies", f"unknown strategy {s!r}")

    def to_dict(self):
        d = asdict(self)
        d["traffic"] = asdict(self.traffic)
        d["delay_model"] = asdict(self.delay_model)
        for k in ("ranges_m", "road_lengths_m", "strategies", "cr_factors"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["traffic"] = TrafficParams(**d["traffic"])
        d["delay_model"] = DelayModel(**d["delay_model"])
        for k in ("ranges_m", "road_lengths_m", "strategies", "cr_factors"):
            d[k] = tuple(d[k])
        return cls(**d)

    def build_strategies(self):
        """Expand strategy names x CR factors into concrete variants."""
        variants = []
        for name in self.strategies:
            if name == "backtrack":
                variants.append(PureV2VBacktrack(
                    d2d_range_factor=self.cr_factors[0],
                    max_back_hops=self.max_back_hops,
                    time_budget=self.carry_budget_s,
                ))
            else:
                cls = D2DOnDemand if name == "d2d_on_demand" else D2DProactive
                for f in self.cr_factors:
                    variants.append(cls(d2d_range_factor=f))
        return variants


# ---------------------------------------------------------------------------
# aggregation


@dataclass(frozen=True)
class MetricStats:
    mean: float
    std: float
    n: int
    ci95: float = None
    ci99: float = None


def _half_width(std, n, level):
    if n < 2 or not math.isfinite(std):
        return None
    if n < 30:
        crit = float(_sstats.t.ppf(0.5 + level / 2.0, n - 1))
    else:
        crit = float(_sstats.norm.ppf(0.5 + level / 2.0))
    return crit * std / math.sqrt(n)


def summarize(values):
    """Mean/std/CI summary of one metric over replications (index order)."""
    arr = np.asarray(values, dtype=float)
    n = arr.size
    mean = float(arr.mean()) if n else math.nan
    std = float(arr.std(ddof=1)) if n > 1 else math.nan
    return MetricStats(
        mean=mean, std=std, n=n,
        ci95=_half_width(std, n, 0.95),
        ci99=_half_width(std, n, 0.99),
    )


@dataclass(frozen=True)
class AggregateStats:
    """Per-metric summaries of a batch of routing replications."""

    metrics: dict
    replications: int

    def __getitem__(self, name):
        return self.metrics[name]


def _seed_chain(master, *indices):
    s = master
    for ix in indices:
        s = _core.derive_seed(s, ix)
    return s


def _map_ordered(func, args, workers):
    """Deterministic parallel map: results always in submission order."""
    if workers <= 1 or len(args) <= 1:
        return [func(a) for a in args]
    chunk = max(1, len(args) // (workers * 8))
    with multiprocessing.Pool(processes=workers) as pool:
        return pool.map(func, args, chunksize=chunk)


def _hybrid_rep(arg):
    scenario, strategy, seed = arg
    o = run_hybrid(scenario, strategy, seed, collect_trace=False)
    return (o.forward_hops, o.backward_hops, o.d2d_links, o.total_delay,
            1.0 if o.delivered else 0.0, o.carry_time, o.deadend_count)


def monte_carlo(scenario, strategy, replications, master_seed, workers=1):
    """Independent replications of :func:`~v2vlab.routing.run_hybrid`.

    Per-replication streams derive from (master seed, replication index),
    so the aggregate is bit-identical for any worker count.
    """
    if replications < 1:
        raise DomainError("require replications >= 1")
    args = [
        (scenario, strategy, _seed_chain(master_seed, i)) for i in range(replications)
    ]
    rows = _map_ordered(_hybrid_rep, args, workers)
    cols = list(zip(*rows))
    metrics = {
        "forward_hops": summarize(cols[0]),
        "backward_hops": summarize(cols[1]),
        "d2d_links": summarize(cols[2]),
        "total_delay": summarize(cols[3]),
        "delivered": summarize(cols[4]),
        "carry_time": summarize(cols[5]),
        "deadend_count": summarize(cols[6]),
    }
    return AggregateStats(metrics=metrics, replications=replications)


# ---------------------------------------------------------------------------
# tables and persistence


@dataclass
class Table:
    name: str
    columns: list
    rows: list = field(default_factory=list)

    def add(self, *row):
        if len(row) != len(self.columns):
            raise DomainError(f"row width {len(row)} != {len(self.columns)}")
        self.rows.append(list(row))

    def column(self, name):
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


@dataclass
class ExperimentResult:
    tables: list
    config: ExperimentConfig
    extras: dict = field(default_factory=dict)


def _fmt_cell(v):
    if v is None:
        return "n/a"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "n/a"
        return f"{v:.9g}"
    return str(v)


def _write_csv(table, path):
    lines = [",".join(table.columns)]
    for row in table.rows:
        lines.append(",".join(_fmt_cell(v) for v in row))
    data = ("\n".join(lines) + "\n").encode()
    path.write_bytes(data)


def persist(result, outdir):
    """Write tables as CSV, a JSON summary, and a digest MANIFEST.

    Accepts an :class:`ExperimentResult`, a bare :class:`Table`, or a bare
    :class:`AggregateStats`.  Re-running an identical configuration
    reproduces the CSV bytes exactly.
    """
    from pathlib import Path

    outdir = Path(outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {outdir}: {exc}") from exc
    if isinstance(result, Table):
        result = ExperimentResult(tables=[result], config=None)
    elif isinstance(result, AggregateStats):
        t = Table("stats", ["metric", "mean", "std", "n", "ci95", "ci99"])
        for name, m in result.metrics.items():
            t.add(name, m.mean, m.std, m.n, m.ci95, m.ci99)
        result = ExperimentResult(tables=[t], config=None)
    written = []
    try:
        for table in result.tables:
            p = outdir / f"{table.name}.csv"
            _write_csv(table, p)
            written.append(p)
        summary = {
            "schema_version": SCHEMA_VERSION,
            "package_version": _pkg_version,
            "config": result.config.to_dict() if result.config else None,
            "master_seed": result.config.master_seed if result.config else None,
            "extras": result.extras,
            "tables": [t.name for t in result.tables],
        }
        p = outdir / "summary.json"
        p.write_bytes((json.dumps(summary, indent=2, sort_keys=True) + "\n").encode())
        written.append(p)
        manifest_lines = []
        for p in sorted(written, key=lambda q: q.name):
            digest = hashlib.sha256(p.read_bytes()).hexdigest()
            manifest_lines.append(f"{digest}  {p.name}")
        (outdir / "MANIFEST").write_bytes(("\n".join(manifest_lines) + "\n").encode())
    except OSError as exc:
        raise OSError(f"while writing {outdir}: {exc}") from exc
    return written + [outdir / "MANIFEST"]


# ---------------------------------------------------------------------------
# analytic-versus-simulation sweep


def _fig3_rep(arg):
    lam, length, mu, sigma, vmin, vmax, tx_range, t_proc, t_access, seed = arg
    rng = _core.Rng(seed)
    pos, _spd = _core.generate_road(lam, length, mu, sigma, vmin, vmax, rng)
    ncomp, relays, extent, tx_delay, e2e = _core.walk_components(
        pos, tx_range, t_proc, t_access
    )
    return ncomp, relays, extent, tx_delay, e2e


def _ratio_ci(y, x, level=0.95):
    """Delta-method CI half-width for sum(y)/sum(x) over paired replications."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    n = y.size
    sx = float(x.sum())
    if n < 2 or sx == 0.0:
        return math.nan
    theta = float(y.sum()) / sx
    resid = y - theta * x
    var = float((resid * resid).sum()) / (n - 1)
    se = math.sqrt(var * n) / sx
    crit = float(_sstats.norm.ppf(0.5 + level / 2.0)) if n >= 30 else float(
        _sstats.t.ppf(0.5 + level / 2.0, n - 1)
    )
    return crit * se


def run_fig3(config):
    """Analytic-versus-simulation table over every (range, road length) cell.

    The simulated columns measure greedy relays and per-relay transmission
    delays per component and normalize by component coverage, mirroring the
    analytic definitions.  Cells with a density-range product below the
    closed-form validity threshold are flagged ``simulate_only``.  Per-cell
    computation errors land in the status column without aborting the sweep.
    """
    t = config.traffic
    lam = spatial_rate(t)
    table = Table("fig3", FIG3_COLUMNS)
    extras = {"cells": []}
    cell_index = 0
    for r_i, tx_range in enumerate(config.ranges_m):
        for l_i, length in enumerate(config.road_lengths_m):
            params = ConnectivityParams(lam=lam, range_m=tx_range)
            lp = params.lam_prime
            status = "pass"
            analytic_hops = analytic_delay_s = None
            closed_ok = lp >= LN4 + config.closed_form_margin
            try:
                if closed_ok:
                    analytic_hops = expected_hops_over_road(
                        params, length, margin=config.closed_form_margin
                    )
                    analytic_delay_s = analytic_delay(
                        params, length, config.delay_model,
                        margin=config.closed_form_margin,
                    )
                else:
                    status = "simulate_only"
                seed_cell = _seed_chain(config.master_seed, 3, cell_index)
                args = [
                    (lam, length, t.mu, t.sigma, t.v_min, t.v_max, tx_range,
                     config.delay_model.t_proc, config.delay_model.t_access,
                     _seed_chain(seed_cell, i))
                    for i in range(config.replications)
                ]
                rows = _map_ordered(_fig3_rep, args, config.workers)
                relays = np.array([r[1] for r in rows], dtype=float)
                extents = np.array([r[2] for r in rows], dtype=float)
                delays = np.array([r[3] for r in rows], dtype=float)
                e2e = np.array([r[4] for r in rows], dtype=float)
                total_extent = float(extents.sum())
                if total_extent == 0.0:
                    raise DomainError("no complete components observed")
                sim_hops = length * float(relays.sum()) / total_extent
                sim_delay = length * float(delays.sum()) / total_extent
                hops_ci = length * _ratio_ci(relays, extents)
                delay_ci = length * _ratio_ci(delays, extents)
                if closed_ok:
                    dev_h = abs(sim_hops - analytic_hops) / analytic_hops
                    dev_d = abs(sim_delay - analytic_delay_s) / analytic_delay_s
                    status = "pass" if (dev_h <= 0.05 and dev_d <= 0.10) else "fail"
                else:
                    dev_h = dev_d = None
                table.add(
                    tx_range, length, lam, lp, analytic_hops, analytic_delay_s,
                    sim_hops, hops_ci, sim_delay, delay_ci, dev_h, dev_d, status,
                )
                extras["cells"].append({
                    "R_m": tx_range, "L_m": length,
                    "end_to_end_nodes_mean": float(e2e.mean()),
                    "components_mean": float(np.mean([r[0] for r in rows])),
                })
            except V2VLabError as exc:
                table.add(
                    tx_range, length, lam, lp, None, None, None, None, None,
                    None, None, None, f"error:{type(exc).__name__}",
                )
                extras["cells"].append({
                    "R_m": tx_range, "L_m": length, "error": str(exc),
                })
            cell_index += 1
    return ExperimentResult(tables=[table], config=config, extras=extras)


# ---------------------------------------------------------------------------
# recovery-strategy sweep


def _fig4_rep(arg):
    scenario, variants, seed = arg
    out = []
    for v in variants:
        o = run_hybrid(scenario, v, seed, collect_trace=False)
        out.append((o.forward_hops, o.backward_hops, o.d2d_links, o.total_delay,
                    1.0 if o.delivered else 0.0, o.deadend_count))
    return out


def run_fig4(config):
    """Recovery-strategy comparison on dead-end-rich roads with paired seeds.

    Every strategy variant replays the identical road realization per
    replication index.  Emits the per-variant table plus a headline table
    with one-sided 99% paired comparisons of each D2D variant against the
    pure-V2V backtracking baseline, computed on the replications that
    actually contain a dead end.
    """
    t = config.traffic
    lam = spatial_rate(t)
    variants = config.build_strategies()
    if not any(isinstance(v, PureV2VBacktrack) for v in variants):
        raise ConfigValidationError("strategies", "fig4 needs the backtrack baseline")
    table = Table("fig4", FIG4_COLUMNS)
    headline = Table("fig4_headline", FIG4_HEADLINE_COLUMNS)
    extras = {"pairings": [], "conditioned": {}}
    for r_i, tx_range in enumerate(config.ranges_m):
        length = config.road_lengths_m[0]
        params = ConnectivityParams(lam=lam, range_m=tx_range)
        p_deadend = 1.0 - math.exp(-lam * params.rho_prime * length)
        if p_deadend < config.deadend_floor:
            raise ConfigValidationError(
                "deadend_floor",
                f"analytic dead-end probability {p_deadend:.3f} at R={tx_range} "
                f"below the floor {config.deadend_floor}; lengthen the road or "
                "lower the density",
            )
        scenario = Scenario(
            traffic=t, tx_range=tx_range, road_length=length,
            delay_model=config.delay_model, spatial_rate_override=lam,
        )
        seed_r = _seed_chain(config.master_seed, 4, r_i)
        args = [
            (scenario, variants, _seed_chain(seed_r, i))
            for i in range(config.replications)
        ]
        rows = _map_ordered(_fig4_rep, args, config.workers)
        per_variant = {v: np.array([row[j] for row in rows], dtype=float)
                       for j, v in enumerate(variants)}
        # a dead end on the shared snapshot is strategy-independent
        first = per_variant[variants[0]]
        deadend_mask = first[:, 5] >= 1.0
        n_deadend = int(deadend_mask.sum())
        if n_deadend < 100:
            raise InsufficientDeadEndsError(
                f"only {n_deadend} dead-end replications at R={tx_range}; "
                "need at least 100"
            )
        extras["conditioned"][str(tx_range)] = {
            "n_deadend": n_deadend,
            "deadend_rate": n_deadend / config.replications,
        }
        backtrack = next(v for v in variants if isinstance(v, PureV2VBacktrack))
        bt = per_variant[backtrack]
        conditioned_rows = []
        for v in variants:
            m = per_variant[v]
            stats_delay = summarize(m[:, 3])
            cr = None if isinstance(v, PureV2VBacktrack) else v.d2d_range_factor
            table.add(
                v.name, cr, tx_range,
                float(m[:, 0].mean()), float(m[:, 1].mean()), float(m[:, 2].mean()),
                stats_delay.mean, stats_delay.ci95,
                float(m[:, 4].mean()), float(m[:, 5].astype(bool).mean()),
            )
            cond = m[deadend_mask]
            conditioned_rows.append({
                "strategy": v.name, "cr_factor": cr,
                "delay_mean_s": float(cond[:, 3].mean()),
                "delivery_rate": float(cond[:, 4].mean()),
                "forward_hops_mean": float(cond[:, 0].mean()),
            })
            if isinstance(v, PureV2VBacktrack):
                continue
            # paired one-sided comparison on dead-end replications
            diff = bt[deadend_mask, 3] - m[deadend_mask, 3]
            nd = diff.size
            mean_diff = float(diff.mean())
            sd = float(diff.std(ddof=1))
            t_stat = mean_diff / (sd / math.sqrt(nd)) if sd > 0.0 else math.inf
            t_crit = float(_sstats.t.ppf(0.99, nd - 1))
            headline.add(
                f"{v.name} vs backtrack", tx_range, v.d2d_range_factor, nd,
                float(m[deadend_mask, 3].mean()), float(bt[deadend_mask, 3].mean()),
                mean_diff, t_stat, t_crit, bool(t_stat > t_crit),
            )
            extras["pairings"].append({
                "strategy": v.name, "cr_factor": v.d2d_range_factor, "R_m": tx_range,
                "delivery_superset_violations": int(
                    ((m[:, 4] == 0.0) & (bt[:, 4] == 1.0)).sum()
                ),
            })
        extras["conditioned"][str(tx_range)]["per_strategy"] = conditioned_rows
        # per-seed ordering of the two discovery modes at equal factors
        for f in config.cr_factors:
            od = per_variant.get(D2DOnDemand(d2d_range_factor=f))
            pro = per_variant.get(D2DProactive(d2d_range_factor=f))
            if od is not None and pro is not None:
                extras["pairings"].append({
                    "check": "proactive_le_on_demand", "cr_factor": f, "R_m": tx_range,
                    "violations": int((pro[:, 3] > od[:, 3] + 1e-15).sum()),
                })
    return ExperimentResult(tables=[table, headline], config=config, extras=extras)
