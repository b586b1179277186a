"""Config-file schema and strict parser.

The file format is sectioned ``key = value`` text (INI).  Unknown keys are
hard errors with a nearest-key suggestion: a silent typo in a scientific
config corrupts results invisibly.  Every key carries a unit, a default,
and a range check; the CLI ``--help`` text is generated from this schema,
so documentation cannot drift from the code.
"""

import configparser
import difflib
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigParseError, ConfigValidationError
from .experiments import ExperimentConfig
from .routing import DelayModel
from .traffic import TrafficParams


@dataclass(frozen=True)
class Key:
    section: str
    name: str
    parse: callable
    default: object
    unit: str
    doc: str
    check: callable = None
    legal: str = ""

    @property
    def qualified(self):
        return f"{self.section}.{self.name}"


def _float_list(s):
    return tuple(float(x.strip()) for x in s.split(",") if x.strip())


def _str_list(s):
    return tuple(x.strip() for x in s.split(",") if x.strip())


def _positive(v):
    return v > 0


def _non_negative(v):
    return v >= 0


def _all_positive(v):
    return len(v) > 0 and all(x > 0 for x in v)


SCHEMA = [
    Key("traffic", "lambda_a", float, 0.5, "vehicles/s",
        "vehicle arrival rate at the road entry", _positive, "> 0"),
    Key("traffic", "mu", float, 25.0, "m/s",
        "mean of the underlying normal speed law", None, "finite"),
    Key("traffic", "sigma", float, 5.0, "m/s",
        "std-dev of the underlying normal speed law", _positive, "> 0"),
    Key("traffic", "v_min", float, 20.0, "m/s",
        "minimum vehicle speed", _positive, "> 0"),
    Key("traffic", "v_max", float, 30.0, "m/s",
        "maximum vehicle speed", _positive, "> v_min"),
    Key("link", "ranges_m", _float_list, (200.0,), "m (comma list)",
        "V2V transmission ranges to sweep", _all_positive, "each > 0"),
    Key("link", "closed_form_margin", float, 0.05, "dimensionless",
        "safety margin above ln(4) for closed-form analytics", _non_negative, ">= 0"),
    Key("delay", "t_proc_s", float, 0.002, "s",
        "per-hop processing delay", _non_negative, ">= 0"),
    Key("delay", "t_access_s", float, 0.0005, "s/neighbor",
        "channel-access delay per neighbor of the sender", _non_negative, ">= 0"),
    Key("delay", "t_d2d_discovery_on_demand_s", float, 0.200, "s",
        "D2D peer discovery when run on demand", _non_negative, ">= 0"),
    Key("delay", "t_d2d_discovery_proactive_s", float, 0.0, "s",
        "D2D peer discovery when maintained proactively", _non_negative, ">= 0"),
    Key("delay", "t_d2d_setup_s", float, 0.050, "s",
        "D2D session setup through the base station", _non_negative, ">= 0"),
    Key("delay", "t_d2d_tx_s", float, 0.010, "s",
        "D2D bridge transmission time", _non_negative, ">= 0"),
    Key("delay", "t_cellular_fallback_s", float, 0.100, "s",
        "direct cellular uplink to the TCC", _non_negative, ">= 0"),
    Key("delay", "carry_step_s", float, 0.5, "s",
        "mobility tick while store-carry-forwarding", _positive, "> 0"),
    Key("experiment", "road_lengths_m", _float_list, (10000.0,), "m (comma list)",
        "road lengths to sweep", _all_positive, "each > 0"),
    Key("experiment", "strategies", _str_list,
        ("backtrack", "d2d_on_demand", "d2d_proactive"), "names (comma list)",
        "recovery strategies: backtrack | d2d_on_demand | d2d_proactive", None,
        "known names"),
    Key("experiment", "cr_factors", _float_list, (3.0, 4.0, 5.0), "x V2V range",
        "D2D reach as a multiple of the V2V range", _all_positive, "each > 0"),
    Key("experiment", "replications", int, 10000, "count",
        "Monte Carlo replications per cell", _positive, ">= 1"),
    Key("experiment", "master_seed", int, 20260809, "u64",
        "master seed; all randomness derives from it",
        lambda v: 0 <= v < 2 ** 64, "0 <= seed < 2^64"),
    Key("experiment", "output_dir", str, "out", "path",
        "output directory for tables and summaries", None, "writable path"),
    Key("experiment", "workers", int, 1, "count",
        "parallel worker processes", _positive, ">= 1"),
    Key("experiment", "deadend_floor", float, 0.5, "probability",
        "minimum per-road dead-end probability for the recovery sweep",
        lambda v: 0.0 <= v <= 1.0, "in [0, 1]"),
    Key("experiment", "max_back_hops", int, 1, "count",
        "backward passes before store-carry-forward", _non_negative, ">= 0"),
    Key("experiment", "carry_budget_s", float, 60.0, "s",
        "simulated-time budget for store-carry-forward", _positive, "> 0"),
]

_BY_SECTION = {}
for _k in SCHEMA:
    _BY_SECTION.setdefault(_k.section, {})[_k.name] = _k


def schema_help():
    """One line per config key: section.name (unit, default) description."""
    lines = []
    for k in SCHEMA:
        lines.append(f"  {k.qualified:42s} [{k.unit}] default={k.default!r}: {k.doc}")
    return "\n".join(lines)


def _suggest(name):
    known = [k.name for k in SCHEMA]
    close = difflib.get_close_matches(name, known, n=1)
    return f" (did you mean {close[0]!r}?)" if close else ""


def parse_config(path):
    """Parse and validate a config file into an :class:`ExperimentConfig`.

    Missing keys take their documented defaults; unknown sections or keys
    are hard errors; out-of-range values name the key, the value, and the
    legal range.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigParseError(f"config file not found: {path}")
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, "r") as fh:
            cp.read_file(fh, source=str(path))
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigParseError(str(exc), line=line) from exc
    values = {}
    for section in cp.sections():
        if section not in _BY_SECTION:
            raise ConfigValidationError(
                section, f"unknown section (known: {sorted(_BY_SECTION)})"
            )
        for name, raw in cp.items(section):
            key = _BY_SECTION[section].get(name)
            if key is None:
                raise ConfigValidationError(
                    f"{section}.{name}", f"unknown key{_suggest(name)}"
                )
            try:
                val = key.parse(raw)
            except ValueError as exc:
                raise ConfigValidationError(
                    key.qualified, f"cannot parse {raw!r} as {key.parse.__name__}: {exc}"
                ) from exc
            values[key.qualified] = val
    return build_config(values)


def build_config(values=None):
    """Assemble an :class:`ExperimentConfig` from qualified-key overrides."""
    values = dict(values or {})
    resolved = {}
    for k in SCHEMA:
        v = values.pop(k.qualified, k.default)
        if k.check is not None and not k.check(v):
            raise ConfigValidationError(
                k.qualified, f"value {v!r} violates the constraint {k.legal}"
            )
        resolved[k.qualified] = v
    if values:
        raise ConfigValidationError(next(iter(values)), "unknown key")
    if not resolved["traffic.v_min"] < resolved["traffic.v_max"]:
        raise ConfigValidationError(
            "traffic.v_max",
            f"value {resolved['traffic.v_max']!r} violates the constraint > v_min",
        )
    traffic = TrafficParams(
        lambda_a=resolved["traffic.lambda_a"],
        v_min=resolved["traffic.v_min"],
        v_max=resolved["traffic.v_max"],
        mu=resolved["traffic.mu"],
        sigma=resolved["traffic.sigma"],
    )
    delay = DelayModel(
        t_proc=resolved["delay.t_proc_s"],
        t_access=resolved["delay.t_access_s"],
        t_d2d_discovery_on_demand=resolved["delay.t_d2d_discovery_on_demand_s"],
        t_d2d_discovery_proactive=resolved["delay.t_d2d_discovery_proactive_s"],
        t_d2d_setup=resolved["delay.t_d2d_setup_s"],
        t_d2d_tx=resolved["delay.t_d2d_tx_s"],
        t_cellular_fallback=resolved["delay.t_cellular_fallback_s"],
        carry_step=resolved["delay.carry_step_s"],
    )
    return ExperimentConfig(
        traffic=traffic,
        ranges_m=resolved["link.ranges_m"],
        road_lengths_m=resolved["experiment.road_lengths_m"],
        strategies=resolved["experiment.strategies"],
        cr_factors=resolved["experiment.cr_factors"],
        replications=resolved["experiment.replications"],
        master_seed=resolved["experiment.master_seed"],
        delay_model=delay,
        output_dir=resolved["experiment.output_dir"],
        workers=resolved["experiment.workers"],
        closed_form_margin=resolved["link.closed_form_margin"],
        deadend_floor=resolved["experiment.deadend_floor"],
        max_back_hops=resolved["experiment.max_back_hops"],
        carry_budget_s=resolved["experiment.carry_budget_s"],
    )
