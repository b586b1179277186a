"""Greedy V2V forwarding with three dead-end recovery strategies.

Messages travel toward increasing position; the RSU sits at the road end.
A dead end (no vehicle within range ahead) is recovered either by
device-to-device bridging over a wider radio reach (discovery on demand or
proactive) or, for the pure-V2V baseline, by passing the message backward
and store-carry-forwarding until mobility closes the gap.  In a 1-D
topology backward passes can never discover a disjoint path, so the
baseline's value comes entirely from carrying; this is intentional and
makes the baseline non-trivially comparable.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _core
from ._core import fallback as _py
from .errors import DomainError

EVENT_NAMES = {
    _core.EV_SRC: "src",
    _core.EV_HOP: "hop",
    _core.EV_DEADEND: "dead_end",
    _core.EV_BACK: "back",
    _core.EV_CARRY: "carry",
    _core.EV_D2D: "d2d_bridge",
    _core.EV_CELL: "cellular",
    _core.EV_RSU: "rsu",
}

MODE_NAMES = {
    _core.MODE_NONE: "none",
    _core.MODE_V2V: "v2v_to_rsu",
    _core.MODE_D2D: "d2d_bridge_then_v2v",
    _core.MODE_CELL: "cellular_direct",
}


@dataclass(frozen=True)
class DelayModel:
    """Per-event delay coefficients (seconds).

    Every default below is an invented, configurable figure: the protocol
    itself fixes no timing constants.  ``t_access`` scales with the
    sender's neighbor count, the simplest density proxy for channel
    contention.
    """

    t_proc: float = 0.002
    t_access: float = 0.0005
    t_d2d_discovery_on_demand: float = 0.200
    t_d2d_discovery_proactive: float = 0.0
    t_d2d_setup: float = 0.050
    t_d2d_tx: float = 0.010
    t_cellular_fallback: float = 0.100
    carry_step: float = 0.5

    def __post_init__(self):
        for name in (
            "t_proc", "t_access", "t_d2d_discovery_on_demand",
            "t_d2d_discovery_proactive", "t_d2d_setup", "t_d2d_tx",
            "t_cellular_fallback",
        ):
            if getattr(self, name) < 0.0:
                raise DomainError(f"{name} must be non-negative")
        if not self.carry_step > 0.0:
            raise DomainError("carry_step must be positive")


def _check_factor(factor):
    if not (3.0 <= factor <= 5.0):
        warnings.warn(
            f"d2d_range_factor={factor} outside the usual [3, 5] reach ratio",
            stacklevel=3,
        )
    return factor


@dataclass(frozen=True)
class RecoveryStrategy:
    """Base type for dead-end recovery strategies."""

    d2d_range_factor: float = 4.0

    def __post_init__(self):
        _check_factor(self.d2d_range_factor)


@dataclass(frozen=True)
class PureV2VBacktrack(RecoveryStrategy):
    """Go back up to ``max_back_hops`` relays, then store-carry-forward."""

    max_back_hops: int = 1
    time_budget: float = 60.0

    kernel_code = _core.STRAT_BACKTRACK
    name = "backtrack"

    def __post_init__(self):
        if self.max_back_hops < 0:
            raise DomainError("max_back_hops must be >= 0")
        if not self.time_budget > 0.0:
            raise DomainError("time_budget must be positive")


@dataclass(frozen=True)
class D2DOnDemand(RecoveryStrategy):
    """Bridge dead ends over the D2D reach; discovery runs on demand."""

    kernel_code = _core.STRAT_D2D_ON_DEMAND
    name = "d2d_on_demand"


@dataclass(frozen=True)
class D2DProactive(RecoveryStrategy):
    """Bridge dead ends over the D2D reach; discovery already done."""

    kernel_code = _core.STRAT_D2D_PROACTIVE
    name = "d2d_proactive"


STRATEGY_NAMES = {"backtrack": PureV2VBacktrack, "d2d_on_demand": D2DOnDemand,
                  "d2d_proactive": D2DProactive}


class DeadEnd:
    """Sentinel: greedy forwarding found no vehicle ahead within range."""

    def __repr__(self):
        return "DeadEnd"


DEAD_END = DeadEnd()


class CellularDelivery:
    """Sentinel: no D2D bridge target; message goes straight to the TCC."""

    def __repr__(self):
        return "CellularDelivery"


CELLULAR_DELIVERY = CellularDelivery()


@dataclass(frozen=True)
class TraceEvent:
    vehicle: int  # vehicle id; -1 = RSU, -2 = TCC via cellular
    event: str
    time: float
    position: float


def trace_lines(outcome):
    """Line-oriented trace export: ``timestamp<TAB>position<TAB>event``.

    One record per event, timestamps in seconds, positions in meters;
    meant for debugging dumps and downstream tooling.
    """
    return [
        f"{ev.time:.9g}\t{ev.position:.9g}\t{ev.event}" for ev in outcome.trace
    ]


@dataclass(frozen=True)
class RoutingOutcome:
    """Complete per-message record of one routing run."""

    forward_hops: int
    backward_hops: int
    d2d_links: int
    carry_time: float
    total_delay: float
    delivered: bool
    delivery_mode: str
    trace: tuple
    deadend_count: int = 0

    def validate(self):
        if self.delivered:
            if self.total_delay < 0.0:
                raise DomainError("delivered with negative delay")
            if self.trace and self.trace[-1].event not in ("rsu", "cellular"):
                raise DomainError("delivered trace must end at the RSU or the TCC")
        times = [ev.time for ev in self.trace]
        if any(b < a for a, b in zip(times, times[1:])):
            raise DomainError("trace timestamps must be non-decreasing")
        if self.trace and self.trace[-1].time != self.total_delay:
            raise DomainError("total_delay must equal the final trace timestamp")
        return self


@dataclass(frozen=True)
class Scenario:
    """Everything one routing replication needs except the seed."""

    traffic: "TrafficParams"
    tx_range: float
    road_length: float
    delay_model: DelayModel = field(default_factory=DelayModel)
    spatial_rate_override: float = None

    def spatial_rate(self):
        if self.spatial_rate_override is not None:
            return self.spatial_rate_override
        from .traffic import spatial_rate

        return spatial_rate(self.traffic)


def greedy_next_hop(snapshot, current, tx_range):
    """Farthest vehicle strictly ahead of ``current`` within ``tx_range``.

    Returns the vehicle index, or the :data:`DEAD_END` sentinel when no
    vehicle lies in the forward window.
    """
    pos = snapshot.positions
    if not (0 <= current < pos.size):
        raise DomainError(f"vehicle index {current} out of range")
    j = int(np.searchsorted(pos, pos[current] + tx_range, side="right")) - 1
    if j > current and pos[j] > pos[current]:
        return j
    return DEAD_END


def _neighbor_count(pos, i, tx_range):
    lo = int(np.searchsorted(pos, pos[i] - tx_range, side="left"))
    hi = int(np.searchsorted(pos, pos[i] + tx_range, side="right")) - 1
    return hi - lo


def route_v2v(snapshot, source, rsu, tx_range, delay_model):
    """Greedy forwarding on a frozen snapshot until delivery or dead end.

    Delivery requires the relay strictly within ``tx_range`` of the RSU and
    costs nothing; every vehicle-to-vehicle hop costs
    ``t_proc + t_access * (sender neighbor count)``.  A dead end leaves the
    outcome undelivered with the stuck vehicle recorded at the end of the
    trace.
    """
    pos = snapshot.positions
    if not (0 <= source < pos.size):
        raise DomainError(f"source index {source} out of range")
    delivered, hops, delay, _last, t_ids, t_evs, t_ts, t_pos = _py.route_v2v(
        pos.tolist(), tx_range, rsu, source,
        delay_model.t_proc, delay_model.t_access, True,
    )
    trace = tuple(
        TraceEvent(v, EVENT_NAMES[e], t, x)
        for v, e, t, x in zip(t_ids, t_evs, t_ts, t_pos)
    )
    return RoutingOutcome(
        forward_hops=hops,
        backward_hops=0,
        d2d_links=0,
        carry_time=0.0,
        total_delay=delay,
        delivered=delivered,
        delivery_mode="v2v_to_rsu" if delivered else "none",
        trace=trace,
        deadend_count=0 if delivered else 1,
    ).validate()


def recover_d2d(snapshot, stuck, strategy, tx_range, delay_model):
    """Bridge a dead end over the widened D2D reach.

    Returns ``(target_index, added_delay)`` for a successful bridge to the
    farthest vehicle within ``d2d_range_factor * tx_range``, or
    ``(CELLULAR_DELIVERY, t_cellular_fallback)`` when nothing is reachable
    and the message is handed to the cellular uplink.
    """
    if isinstance(strategy, PureV2VBacktrack):
        raise DomainError("recover_d2d needs a D2D strategy")
    pos = snapshot.positions
    reach = strategy.d2d_range_factor * tx_range
    j = int(np.searchsorted(pos, pos[stuck] + reach, side="right")) - 1
    if j > stuck and pos[j] > pos[stuck]:
        discovery = (
            delay_model.t_d2d_discovery_on_demand
            if isinstance(strategy, D2DOnDemand)
            else delay_model.t_d2d_discovery_proactive
        )
        return j, discovery + delay_model.t_d2d_setup + delay_model.t_d2d_tx
    return CELLULAR_DELIVERY, delay_model.t_cellular_fallback


@dataclass(frozen=True)
class BacktrackResult:
    """Outcome of one pure-V2V recovery episode."""

    resumed: bool            # True when forwarding can continue from `holder`
    delivered: bool          # True when the carried message reached the RSU
    holder: int              # index in `snapshot` (when resumed)
    snapshot: "RoadSnapshot"
    added_delay: float
    carry_time: float
    backward_hops: int


def recover_backtrack(snapshot, stuck, strategy, tx_range, delay_model, traffic, rng,
                      chain=None):
    """Pure-V2V recovery: backward passes, then store-carry-forward.

    ``chain`` lists the relay indices of the forward path (defaults to the
    stuck vehicle alone, i.e. pure carrying).  The snapshot evolves under
    mobility while the holder waits; the episode ends when the greedy chain
    can pass the stuck frontier, the holder comes within range of the RSU
    (delivered), or the time budget runs out (returns ``resumed=False``).
    """
    if not isinstance(strategy, PureV2VBacktrack):
        raise DomainError("recover_backtrack needs the PureV2VBacktrack strategy")
    pos = list(snapshot.positions)
    spd = list(snapshot.speeds)
    ids = list(range(len(pos)))
    chain_ids = list(chain) if chain else [stuck]
    state = {
        "t": 0.0, "carry_time": 0.0, "sim_clock": 0.0,
        "backward_hops": 0, "next_id": len(pos), "carried_out": False,
    }
    cfg = {
        "tx_range": tx_range,
        "rsu": snapshot.rsu_position,
        "road_len": snapshot.road_length,
        "t_proc": delay_model.t_proc,
        "t_access": delay_model.t_access,
        "max_back_hops": strategy.max_back_hops,
        "time_budget": strategy.time_budget,
        "carry_dt": delay_model.carry_step,
        "lambda_a": traffic.lambda_a,
        "mu": traffic.mu,
        "sigma": traffic.sigma,
        "vmin": traffic.v_min,
        "vmax": traffic.v_max,
    }
    trace = _py._Trace(False)
    cur = _py._backtrack_recover(
        pos, spd, ids, stuck, chain_ids, stuck, state, cfg, rng, trace
    )
    from .traffic import RoadSnapshot

    new_snap = RoadSnapshot(
        np.array(pos, dtype=float), np.array(spd, dtype=float),
        snapshot.road_length, snapshot.rsu_position,
    )
    delivered = cur == -2 or state["carried_out"]
    if cur >= 0 and cfg["rsu"] - pos[cur] < tx_range:
        delivered = True
    return BacktrackResult(
        resumed=cur >= 0,
        delivered=delivered,
        holder=cur if cur >= 0 else -1,
        snapshot=new_snap,
        added_delay=state["t"],
        carry_time=state["carry_time"],
        backward_hops=state["backward_hops"],
    )


def run_hybrid(scenario, strategy, seed, collect_trace=True):
    """Generate a road and route one message end to end under ``strategy``.

    The message starts at the first (lowest-position) vehicle and targets
    the RSU at the road end.  Deterministic: identical (scenario, strategy,
    seed) give bit-identical outcomes.
    """
    lam = scenario.spatial_rate()
    t = scenario.traffic
    d = scenario.delay_model
    if isinstance(strategy, PureV2VBacktrack):
        max_back, budget = strategy.max_back_hops, strategy.time_budget
    else:
        max_back, budget = 0, 0.0
    (delivered, mode, fh, bh, dl, carry, delay, deadends,
     t_ids, t_evs, t_ts, t_pos) = _core.run_hybrid(
        lam, scenario.road_length, t.mu, t.sigma, t.v_min, t.v_max, t.lambda_a,
        scenario.tx_range, scenario.road_length, strategy.kernel_code,
        strategy.d2d_range_factor, max_back, budget, d.carry_step,
        d.t_proc, d.t_access, d.t_d2d_discovery_on_demand, d.t_d2d_discovery_proactive,
        d.t_d2d_setup, d.t_d2d_tx, d.t_cellular_fallback,
        seed, collect_trace,
    )
    trace = tuple(
        TraceEvent(v, EVENT_NAMES[e], ts, x)
        for v, e, ts, x in zip(t_ids, t_evs, t_ts, t_pos)
    )
    outcome = RoutingOutcome(
        forward_hops=fh,
        backward_hops=bh,
        d2d_links=dl,
        carry_time=carry,
        total_delay=delay,
        delivered=bool(delivered),
        delivery_mode=MODE_NAMES[mode],
        trace=trace,
        deadend_count=deadends,
    )
    return outcome.validate() if collect_trace else outcome
