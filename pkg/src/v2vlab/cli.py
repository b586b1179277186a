"""Command-line entry point.

Subcommands: ``analytic`` (closed-form tables), ``simulate`` (Monte Carlo
of one scenario per strategy), ``fig3`` (analytic-versus-simulation
sweep), ``fig4`` (recovery-strategy sweep), ``validate`` (fast
cross-check suite).  Exit codes: 0 success, 1 validation failure,
2 config error, 3 I/O error.
"""

import argparse
import math
import os
import sys

from . import __version__, _core
from .config import build_config, parse_config, schema_help
from .connectivity import (
    ConnectivityParams,
    HopKernel,
    LN4,
    component_pmf_oracle,
    expected_component_size,
    expected_hops_over_road,
    expected_retransmitters,
    pmf_from_transform,
    q_transform,
)
from .errors import (
    ConfigParseError,
    ConfigValidationError,
    V2VLabError,
)
from .experiments import (
    ExperimentResult,
    Table,
    monte_carlo,
    persist,
    run_fig3,
    run_fig4,
)
from .quadrature import integrate
from .traffic import spatial_rate, truncated_normal_pdf

OUT_ENV_VAR = "V2VLAB_OUT"


def _build_parser():
    epilog = (
        "config keys (section.key [unit] default: description):\n"
        + schema_help()
        + f"\n\nenvironment:\n  {OUT_ENV_VAR}: output directory override "
        "(lower precedence than --out)\n  V2VLAB_BACKEND: kernel backend "
        "(auto | c | py)"
    )
    p = argparse.ArgumentParser(
        prog="v2vlab",
        description="1-D highway V2V connectivity analytics and hybrid "
        "V2V/D2D routing simulation",
        epilog=epilog,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--version", action="version", version=f"v2vlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, doc in (
        ("analytic", "print and persist the closed-form connectivity tables"),
        ("simulate", "Monte Carlo one scenario per configured strategy"),
        ("fig3", "analytic-versus-simulation sweep over (range, length) cells"),
        ("fig4", "recovery-strategy comparison on dead-end-rich roads"),
        ("validate", "run the fast cross-check suite and exit nonzero on failure"),
    ):
        q = sub.add_parser(name, help=doc, description=doc)
        q.add_argument("--config", metavar="PATH", help="config file (INI format)")
        q.add_argument("--seed", type=int, metavar="U64", help="master seed override")
        q.add_argument("--out", metavar="DIR", help="output directory override")
        q.add_argument("--workers", type=int, metavar="N", help="worker processes")
        q.add_argument("-v", "--verbose", action="count", default=0,
                       help="-v prints progress, -vv prints per-cell detail")
    return p


def _load_config(args):
    cfg = parse_config(args.config) if args.config else build_config()
    updates = {}
    if args.seed is not None:
        if not (0 <= args.seed < 2 ** 64):
            raise ConfigValidationError("--seed", "must fit in 64 bits")
        updates["master_seed"] = args.seed
    out = args.out or os.environ.get(OUT_ENV_VAR)
    if out:
        updates["output_dir"] = out
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigValidationError("--workers", "must be >= 1")
        updates["workers"] = args.workers
    if updates:
        from dataclasses import replace

        cfg = replace(cfg, **updates)
    return cfg


def _header(cfg):
    return (
        f"v2vlab {__version__} | backend={_core.BACKEND} | "
        f"master_seed={cfg.master_seed}"
    )


def _fmt(x, nd=6):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "n/a"
    if isinstance(x, float):
        return f"{x:.{nd}g}"
    return str(x)


def _print_table(table, out=None):
    out = out if out is not None else sys.stdout
    cols = table.columns
    rows = [[_fmt(v) for v in r] for r in table.rows]
    widths = [max(len(c), *(len(r[i]) for r in rows)) if rows else len(c)
              for i, c in enumerate(cols)]
    line = "  ".join(c.ljust(w) for c, w in zip(cols, widths))
    print(line, file=out)
    print("-" * len(line), file=out)
    for r in rows:
        print("  ".join(v.ljust(w) for v, w in zip(r, widths)), file=out)


def cmd_analytic(cfg, verbose=0):
    lam = spatial_rate(cfg.traffic)
    cols = (["R_m", "L_m", "lambda_per_m", "lambda_prime", "rho", "rho_prime"]
            + [f"p{k}" for k in range(1, 11)]
            + ["e_retransmitters", "e_size_m", "e_hops_L", "status"])
    table = Table("analytic", cols)
    for r in cfg.ranges_m:
        params = ConnectivityParams(lam=lam, range_m=r)
        for length in cfg.road_lengths_m:
            try:
                params.require_closed_form(cfg.closed_form_margin)
                dist = pmf_from_transform(10, params, margin=cfg.closed_form_margin)
                e_n = expected_retransmitters(params, margin=cfg.closed_form_margin)
                e_size = expected_component_size(params)
                e_hops = expected_hops_over_road(
                    params, length, margin=cfg.closed_form_margin, cross_validate=False
                )
                table.add(
                    r, length, lam, params.lam_prime, params.rho, params.rho_prime,
                    *[dist.prob(k) for k in range(1, 11)],
                    e_n, e_size, e_hops, "ok",
                )
            except V2VLabError as exc:
                table.add(
                    r, length, lam, params.lam_prime, params.rho, params.rho_prime,
                    *([None] * 10), None, None, None, f"error:{type(exc).__name__}",
                )
                if verbose:
                    print(f"cell R={r} L={length}: {exc}")
    print(_header(cfg))
    _print_table(table)
    persist(ExperimentResult(tables=[table], config=cfg), cfg.output_dir)
    print(f"wrote {cfg.output_dir}/analytic.csv")
    return 0


def cmd_simulate(cfg, verbose=0):
    from .routing import Scenario

    lam = spatial_rate(cfg.traffic)
    scenario = Scenario(
        traffic=cfg.traffic, tx_range=cfg.ranges_m[0],
        road_length=cfg.road_lengths_m[0], delay_model=cfg.delay_model,
        spatial_rate_override=lam,
    )
    cols = ["strategy", "cr_factor", "metric", "mean", "std", "n", "ci95", "ci99"]
    table = Table("simulate", cols)
    print(_header(cfg))
    trace_dumps = []
    for variant in cfg.build_strategies():
        seed = _core.derive_seed(cfg.master_seed, 7)
        stats = monte_carlo(scenario, variant, cfg.replications, seed,
                            workers=cfg.workers)
        cr = getattr(variant, "d2d_range_factor", None)
        if variant.name == "backtrack":
            cr = None
        for metric, m in stats.metrics.items():
            table.add(variant.name, cr, metric, m.mean, m.std, m.n, m.ci95, m.ci99)
        if verbose:
            d = stats["total_delay"]
            print(f"{variant.name:14s} delay={d.mean:.4f}s +-{_fmt(d.ci95)} "
                  f"delivered={stats['delivered'].mean:.3f}")
        if verbose >= 2:
            from .routing import run_hybrid as _run_one

            first = _run_one(scenario, variant, _core.derive_seed(seed, 0))
            trace_dumps.append((variant, first))
    if trace_dumps:
        from pathlib import Path

        from .routing import trace_lines

        trace_path = Path(cfg.output_dir) / "trace_rep0.log"
        trace_path.parent.mkdir(parents=True, exist_ok=True)
        with open(trace_path, "w") as fh:
            for variant, outcome in trace_dumps:
                cr = getattr(variant, "d2d_range_factor", "")
                fh.write(f"# {variant.name} cr={cr}\n")
                fh.write("\n".join(trace_lines(outcome)) + "\n")
        print(f"wrote {trace_path}")
    _print_table(table)
    persist(ExperimentResult(tables=[table], config=cfg), cfg.output_dir)
    print(f"wrote {cfg.output_dir}/simulate.csv")
    return 0


def cmd_fig3(cfg, verbose=0):
    print(_header(cfg))
    result = run_fig3(cfg)
    _print_table(result.tables[0])
    persist(result, cfg.output_dir)
    print(f"wrote {cfg.output_dir}/fig3.csv")
    return 0


def cmd_fig4(cfg, verbose=0):
    print(_header(cfg))
    result = run_fig4(cfg)
    for t in result.tables:
        _print_table(t)
        print()
    persist(result, cfg.output_dir)
    print(f"wrote {cfg.output_dir}/fig4.csv and fig4_headline.csv")
    return 0


def cmd_validate(cfg, verbose=0):
    """Fast cross-check suite; exit 0 iff every non-skipped check passes."""
    lam = spatial_rate(cfg.traffic)
    params = ConnectivityParams(lam=lam, range_m=cfg.ranges_m[0])
    margin = cfg.closed_form_margin
    closed_ok = params.lam_prime >= LN4 + margin
    checks = []

    def record(name, fn):
        try:
            detail = fn()
            checks.append((name, "PASS", detail))
        except V2VLabError as exc:
            checks.append((name, "FAIL", f"{type(exc).__name__}: {exc}"))
        except AssertionError as exc:
            checks.append((name, "FAIL", str(exc)))

    def skip(name, why):
        checks.append((name, "SKIP", why))

    def check_pdf():
        dist = cfg.traffic.speed_distribution()
        total = integrate(lambda v: truncated_normal_pdf(v, dist),
                          dist.v_min, dist.v_max, rel_tol=1e-12)
        assert abs(total - 1.0) <= 1e-9, f"pdf mass {total!r}"
        return f"mass deviation {abs(total - 1.0):.2e}"

    def check_kernel():
        kernel = HopKernel(params)
        r = params.range_m
        for x_prev in (0.0, 0.25 * r, 0.5 * r, 0.9 * r, r):
            total = kernel.termination_probability(x_prev) + kernel.cdf(r, x_prev)
            assert total == 1.0, f"defective mass {total!r} at x_prev={x_prev}"
        return "termination identity exact at 5 probe points"

    def check_q1():
        q1 = q_transform(1.0, params, margin)
        assert abs(q1 - 1.0) <= 1e-6, f"Q(1) = {q1}"
        return f"|Q(1)-1| = {abs(q1 - 1.0):.2e}"

    def check_equiv():
        oracle = component_pmf_oracle(6, params)
        trans = pmf_from_transform(6, params, margin=margin)
        worst = max(abs(oracle.prob(k) - trans.prob(k)) for k in range(1, 7))
        assert worst <= 1e-4, f"oracle/transform gap {worst:.2e}"
        return f"max PMF gap {worst:.2e} (k <= 6)"

    def check_identities():
        oracle = component_pmf_oracle(2, params)
        d1 = abs(oracle.prob(1) - params.rho_prime)
        d2 = abs(oracle.prob(2) - params.rho)
        assert max(d1, d2) <= 1e-6, f"identity gaps {d1:.2e}, {d2:.2e}"
        return f"P(1), P(2) identity gaps {d1:.2e}, {d2:.2e}"

    def check_mean():
        value = expected_retransmitters(params, margin=margin, cross_validate=True)
        return f"mean component size {value:.6f} (closed form = oracle series)"

    record("pdf_normalization", check_pdf)
    record("kernel_termination_identity", check_kernel)
    record("oracle_printed_identities", check_identities)
    if closed_ok:
        record("pgf_normalization", check_q1)
        record("oracle_transform_equivalence", check_equiv)
        record("mean_cross_validation", check_mean)
    else:
        why = f"lam*R = {params.lam_prime:.4f} below ln(4)+{margin:g}"
        skip("pgf_normalization", why)
        skip("oracle_transform_equivalence", why)
        skip("mean_cross_validation", why)

    print(_header(cfg))
    failed = 0
    for name, status, detail in checks:
        print(f"{status:4s} {name}: {detail}")
        failed += status == "FAIL"
    print(f"{len(checks) - failed}/{len(checks)} checks passed"
          f" ({sum(1 for c in checks if c[1] == 'SKIP')} skipped)")
    return 0 if failed == 0 else 1


_COMMANDS = {
    "analytic": cmd_analytic,
    "simulate": cmd_simulate,
    "fig3": cmd_fig3,
    "fig4": cmd_fig4,
    "validate": cmd_validate,
}


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
    except (ConfigParseError, ConfigValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return _COMMANDS[args.command](cfg, verbose=args.verbose)
    except (ConfigParseError, ConfigValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except V2VLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
