"""Pure-Python simulation kernels.

This module is the reference implementation of the hot loops: road
generation, mobility stepping, greedy forwarding, the hybrid routing
engine, and the component samplers.  The compiled core in ``_speedups.pyx``
mirrors it line for line; both use the same scalar algorithms and the same
libm calls, so results are bit-identical across backends.

Everything here works on plain Python lists of floats and consumes
randomness from the splitmix64 stream below, which makes the executed
arithmetic independent of numpy versions and BLAS builds.
"""

import math

BACKEND_NAME = "python"

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53

# trace event codes
EV_SRC = 0
EV_HOP = 1
EV_DEADEND = 2
EV_BACK = 3
EV_CARRY = 4
EV_D2D = 5
EV_CELL = 6
EV_RSU = 7

# delivery modes
MODE_NONE = 0
MODE_V2V = 1
MODE_D2D = 2
MODE_CELL = 3

# strategy codes
STRAT_BACKTRACK = 0
STRAT_D2D_ON_DEMAND = 1
STRAT_D2D_PROACTIVE = 2


def _mix64(x):
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(master, index):
    """Stable child-seed derivation: mixes (master, index) into a fresh seed."""
    s = (master + (index + 1) * _GOLDEN) & _MASK64
    return _mix64(_mix64(s) ^ _GOLDEN)


class Rng:
    """splitmix64 stream with the distribution helpers the kernels need."""

    __slots__ = ("state",)

    def __init__(self, seed):
        self.state = seed & _MASK64

    def u64(self):
        self.state = (self.state + _GOLDEN) & _MASK64
        return _mix64(self.state)

    def uniform(self):
        """Uniform double in [0, 1)."""
        return (self.u64() >> 11) * _INV_2_53

    def expovariate(self, rate):
        """Exponential with the given rate (strictly positive values)."""
        g = -math.log1p(-self.uniform()) / rate
        while g == 0.0:
            g = -math.log1p(-self.uniform()) / rate
        return g

    def poisson(self, mean):
        """Poisson count via Knuth's product method (small means only)."""
        if mean > 100.0:
            raise ValueError("poisson(mean > 100) not supported by this sampler")
        limit = math.exp(-mean)
        k = 0
        p = 1.0
        while True:
            p *= self.uniform()
            if p <= limit:
                return k
            k += 1

    def trunc_normal(self, mu, sigma, lo, hi):
        """Truncated-normal draw by inverse CDF on the restricted range."""
        sqrt2 = math.sqrt(2.0)
        p_lo = 0.5 * math.erfc(-((lo - mu) / sigma) / sqrt2)
        p_hi = 0.5 * math.erfc(-((hi - mu) / sigma) / sqrt2)
        p = p_lo + self.uniform() * (p_hi - p_lo)
        x = mu + sigma * ndtri(p)
        if x < lo:
            x = lo
        elif x > hi:
            x = hi
        return x


def ndtri(p):
    """Inverse standard-normal CDF, Wichura's AS241 double-precision fit."""
    if p <= 0.0 or p >= 1.0:
        raise ValueError("ndtri requires 0 < p < 1")
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r
                    + 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r
                  + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r
                + 1.3314166789178437745e2) * r + 3.3871328727963666080e0)
        den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r
                    + 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r
                  + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r
                + 4.2313330701600911252e1) * r + 1.0)
        return q * num / den
    r = p if q < 0.0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r
                    + 2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r
                  + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r
                + 4.63033784615654529590e0) * r + 1.42343711074968357734e0)
        den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r
                    + 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r
                  + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r
                + 2.05319162663775882187e0) * r + 1.0)
    else:
        r -= 5.0
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                    + 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r
                  + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r
                + 5.46378491116411436990e0) * r + 6.65790464350110377720e0)
        den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r
                    + 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r
                  + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r
                + 5.99832206555887937690e-1) * r + 1.0)
    x = num / den
    return -x if q < 0.0 else x


# ---------------------------------------------------------------------------
# road generation and mobility


def generate_road(lam, length, mu, sigma, vmin, vmax, rng):
    """Poisson road on (0, length]: exponential gaps, i.i.d. truncated-normal speeds."""
    positions = []
    speeds = []
    x = 0.0
    while True:
        x += rng.expovariate(lam)
        if x > length:
            break
        positions.append(x)
        speeds.append(rng.trunc_normal(mu, sigma, vmin, vmax))
    return positions, speeds


def _sort_by_position(pos, spd, ids):
    """In-place insertion sort of the three parallel lists (nearly sorted input)."""
    for i in range(1, len(pos)):
        p = pos[i]
        s = spd[i]
        d = ids[i]
        j = i - 1
        while j >= 0 and pos[j] > p:
            pos[j + 1] = pos[j]
            spd[j + 1] = spd[j]
            ids[j + 1] = ids[j]
            j -= 1
        pos[j + 1] = p
        spd[j + 1] = s
        ids[j + 1] = d


def advance_road(pos, spd, ids, length, dt, lambda_a, mu, sigma, vmin, vmax, rng, next_id):
    """One mobility step: drift, removal past ``length``, Poisson re-injection.

    Mutates the three parallel lists in place and returns the updated
    ``next_id`` counter.  Injection happens at the road start: each arrival
    within the step ends up at position ``(dt - t_arrival) * speed``.
    """
    n = len(pos)
    w = 0
    for i in range(n):
        p = pos[i] + spd[i] * dt
        if p <= length:
            pos[w] = p
            spd[w] = spd[i]
            ids[w] = ids[i]
            w += 1
    del pos[w:]
    del spd[w:]
    del ids[w:]
    k = rng.poisson(lambda_a * dt)
    for _ in range(k):
        u = rng.uniform()
        v = rng.trunc_normal(mu, sigma, vmin, vmax)
        p = (dt - u * dt) * v
        if p <= length:
            pos.append(p)
            spd.append(v)
            ids.append(next_id)
            next_id += 1
    _sort_by_position(pos, spd, ids)
    return next_id


# ---------------------------------------------------------------------------
# search helpers (positions sorted ascending)


def _rightmost_le(pos, value):
    """Index of the rightmost position <= value, or -1."""
    lo = 0
    hi = len(pos)
    while lo < hi:
        mid = (lo + hi) // 2
        if pos[mid] <= value:
            lo = mid + 1
        else:
            hi = mid
    return lo - 1


def _leftmost_ge(pos, value):
    """Index of the leftmost position >= value, or len(pos)."""
    lo = 0
    hi = len(pos)
    while lo < hi:
        mid = (lo + hi) // 2
        if pos[mid] < value:
            lo = mid + 1
        else:
            hi = mid
    return lo


def _neighbor_count(pos, i, reach):
    """Vehicles within [pos[i]-reach, pos[i]+reach], excluding vehicle i."""
    x = pos[i]
    return _rightmost_le(pos, x + reach) - _leftmost_ge(pos, x - reach)


def farthest_in_range(pos, i, reach):
    """Greedy next hop: rightmost index with pos in (pos[i], pos[i]+reach], or -1."""
    j = _rightmost_le(pos, pos[i] + reach)
    if j > i and pos[j] > pos[i]:
        return j
    return -1


# ---------------------------------------------------------------------------
# static-snapshot forwarding


def route_v2v(pos, tx_range, rsu, source, t_proc, t_access, collect_trace):
    """Greedy forwarding from ``source`` toward the RSU on a frozen snapshot.

    Returns (delivered, forward_hops, total_delay, last_index,
    trace_ids, trace_events, trace_times).  Delivery requires the relay to
    sit strictly within ``tx_range`` of the RSU; the delivery transmission
    itself is free.  Each vehicle-to-vehicle hop costs
    ``t_proc + t_access * (sender neighbor count)``.
    """
    trace = _Trace(collect_trace)
    t = 0.0
    hops = 0
    cur = source
    trace.add(cur, EV_SRC, 0.0, pos[cur])
    delivered = False
    while True:
        if rsu - pos[cur] < tx_range:
            delivered = True
            trace.add(-1, EV_RSU, t, rsu)
            break
        nxt = farthest_in_range(pos, cur, tx_range)
        if nxt < 0:
            trace.add(cur, EV_DEADEND, t, pos[cur])
            break
        t += t_proc + t_access * _neighbor_count(pos, cur, tx_range)
        cur = nxt
        hops += 1
        trace.add(cur, EV_HOP, t, pos[cur])
    return delivered, hops, t, cur, trace.ids, trace.events, trace.times, trace.positions


# ---------------------------------------------------------------------------
# hybrid routing engine


class _Trace:
    __slots__ = ("ids", "events", "times", "positions", "on")

    def __init__(self, on):
        self.ids = []
        self.events = []
        self.times = []
        self.positions = []
        self.on = on

    def add(self, vid, ev, t, x):
        if self.on:
            self.ids.append(vid)
            self.events.append(ev)
            self.times.append(t)
            self.positions.append(x)


def _index_of_id(ids, vid):
    for i in range(len(ids)):
        if ids[i] == vid:
            return i
    return -1


def _chain_resolves(pos, ids, i, reach, frontier_id, rsu):
    """True when the greedy chain from ``i`` gets the message unstuck.

    The dead end is resolved once the chain ends somewhere other than the
    vehicle that was stuck (``frontier_id``) after at least one hop, or
    once any chain node comes within delivery reach of the RSU.  Comparing
    vehicle identity rather than position keeps the test meaningful while
    everything drifts forward.
    """
    cur = i
    moved = False
    while True:
        if rsu - pos[cur] < reach:
            return True
        nxt = farthest_in_range(pos, cur, reach)
        if nxt < 0:
            return moved and ids[cur] != frontier_id
        cur = nxt
        moved = True


def _backtrack_recover(pos, spd, ids, cur, chain, frontier_id, state, cfg, rng, trace,
                       new_episode=True):
    """Backward passes followed by store-carry-forward at the holder.

    ``state`` is the mutable engine accounting dict; ``cfg`` carries the
    scenario constants.  Returns the holder index for resumed forwarding,
    -1 when the carry budget ran out, or -2 when the holder physically
    carried the message past the road end (delivered at the RSU).
    """
    t_proc = cfg["t_proc"]
    t_access = cfg["t_access"]
    tx_range = cfg["tx_range"]
    rsu = cfg["rsu"]
    # go-back passes along the recorded relay chain (new dead ends only)
    backs = 0
    while new_episode and backs < cfg["max_back_hops"] and len(chain) >= 2:
        chain.pop()
        prev_id = chain[-1]
        j = _index_of_id(ids, prev_id)
        if j < 0:
            continue  # that relay has left the road; keep walking back
        state["t"] += t_proc + t_access * _neighbor_count(pos, cur, tx_range)
        cur = j
        state["backward_hops"] += 1
        backs += 1
        trace.add(prev_id, EV_BACK, state["t"], pos[cur])
        if _chain_resolves(pos, ids, cur, tx_range, frontier_id, rsu):
            return cur  # forward progress exists past the stuck relay
    # carry at the current holder until vehicles rearrange
    dt = cfg["carry_dt"]
    while state["sim_clock"] + dt <= cfg["time_budget"] + 1e-12:
        holder_id = ids[cur]
        state["next_id"] = advance_road(
            pos, spd, ids, cfg["road_len"], dt,
            cfg["lambda_a"], cfg["mu"], cfg["sigma"], cfg["vmin"], cfg["vmax"],
            rng, state["next_id"],
        )
        state["sim_clock"] += dt
        state["carry_time"] += dt
        state["t"] += dt
        cur = _index_of_id(ids, holder_id)
        trace.add(holder_id, EV_CARRY, state["t"],
                  pos[cur] if cur >= 0 else cfg["road_len"])
        if cur < 0:
            # holder crossed the road end carrying the message: it is at the RSU
            state["carried_out"] = True
            return -2
        if cfg["rsu"] - pos[cur] < tx_range:
            return cur  # delivery check in the main loop will fire
        if _chain_resolves(pos, ids, cur, tx_range, frontier_id, rsu):
            return cur  # topology changed; the dead end resolved
    return -1  # budget exhausted


def run_hybrid(
    lam, road_len, mu, sigma, vmin, vmax, lambda_a,
    tx_range, rsu, strategy, d2d_factor, max_back_hops, time_budget, carry_dt,
    t_proc, t_access, t_disc_od, t_disc_pro, t_setup, t_d2d_tx, t_cell,
    seed, collect_trace,
):
    """Generate a road and route one message from the first vehicle to the RSU.

    Returns a flat tuple:
    (delivered, mode, forward_hops, backward_hops, d2d_links, carry_time,
     total_delay, deadend_count, trace_ids, trace_events, trace_times).
    """
    rng = Rng(seed)
    pos, spd = generate_road(lam, road_len, mu, sigma, vmin, vmax, rng)
    trace = _Trace(collect_trace)
    n = len(pos)
    if n == 0:
        return (False, MODE_NONE, 0, 0, 0, 0.0, 0.0, 0, [], [], [], [])
    ids = list(range(n))
    state = {
        "t": 0.0,
        "carry_time": 0.0,
        "sim_clock": 0.0,
        "backward_hops": 0,
        "next_id": n,
        "carried_out": False,
    }
    cfg = {
        "tx_range": tx_range,
        "rsu": rsu,
        "road_len": road_len,
        "t_proc": t_proc,
        "t_access": t_access,
        "max_back_hops": max_back_hops,
        "time_budget": time_budget,
        "carry_dt": carry_dt,
        "lambda_a": lambda_a,
        "mu": mu,
        "sigma": sigma,
        "vmin": vmin,
        "vmax": vmax,
    }
    cur = 0
    forward_hops = 0
    d2d_links = 0
    deadends = 0
    frontier_id = -1
    chain = [ids[cur]]
    trace.add(ids[cur], EV_SRC, 0.0, pos[cur])
    delivered = False
    mode = MODE_NONE
    while True:
        if rsu - pos[cur] < tx_range:
            delivered = True
            mode = MODE_D2D if d2d_links > 0 else MODE_V2V
            trace.add(-1, EV_RSU, state["t"], rsu)
            break
        nxt = farthest_in_range(pos, cur, tx_range)
        if nxt >= 0:
            state["t"] += t_proc + t_access * _neighbor_count(pos, cur, tx_range)
            cur = nxt
            forward_hops += 1
            chain.append(ids[cur])
            trace.add(ids[cur], EV_HOP, state["t"], pos[cur])
            continue
        # dead end; a repeat at the same stuck vehicle is not a new episode
        new_episode = ids[cur] != frontier_id
        if new_episode:
            frontier_id = ids[cur]
            deadends += 1
            trace.add(ids[cur], EV_DEADEND, state["t"], pos[cur])
        if strategy == STRAT_D2D_ON_DEMAND or strategy == STRAT_D2D_PROACTIVE:
            bridge = farthest_in_range(pos, cur, d2d_factor * tx_range)
            disc = t_disc_od if strategy == STRAT_D2D_ON_DEMAND else t_disc_pro
            if bridge >= 0:
                state["t"] += disc + t_setup + t_d2d_tx
                cur = bridge
                d2d_links += 1
                chain.append(ids[cur])
                trace.add(ids[cur], EV_D2D, state["t"], pos[cur])
                continue
            state["t"] += t_cell
            delivered = True
            mode = MODE_CELL
            trace.add(-2, EV_CELL, state["t"], pos[cur])
            break
        # pure-V2V recovery: go back, then store-carry-forward
        cur = _backtrack_recover(
            pos, spd, ids, cur, chain, frontier_id, state, cfg, rng, trace, new_episode
        )
        if cur == -1:
            break  # carry budget exhausted: undelivered
        if cur == -2 or state["carried_out"]:
            delivered = True
            mode = MODE_V2V
            trace.add(-1, EV_RSU, state["t"], rsu)
            break
        if chain[-1] != ids[cur]:
            chain.append(ids[cur])
    return (
        delivered, mode, forward_hops, state["backward_hops"], d2d_links,
        state["carry_time"], state["t"], deadends,
        trace.ids, trace.events, trace.times, trace.positions,
    )


# ---------------------------------------------------------------------------
# component statistics


def walk_components(pos, tx_range, t_proc, t_access):
    """Greedy-walk every complete connected component of a snapshot.

    A component is a maximal run of vehicles with successive gaps <= range;
    the trailing component (truncated by the road end) is skipped.  Each
    relay performs one transmission costing
    ``t_proc + t_access * neighbors``; the relay count per component equals
    the greedy chain length from the component's first vehicle.

    Returns (components, relays_total, extent_total, tx_delay_total,
    end_to_end_nodes) where extent is (last - first + range) and
    end_to_end_nodes counts the gap-skipping sampled process over the whole
    snapshot.
    """
    n = len(pos)
    ncomp = 0
    relays_total = 0
    extent_total = 0.0
    delay_total = 0.0
    e2e_nodes = 0
    if n == 0:
        return 0, 0, 0.0, 0.0, 0
    start = 0
    i = 0
    while i < n:
        # find the end of the component that starts at `start`
        if i + 1 < n and pos[i + 1] - pos[i] <= tx_range:
            i += 1
            continue
        if i + 1 < n:
            # complete component [start..i]
            cur = start
            relays = 1
            delay_total += t_proc + t_access * _neighbor_count(pos, cur, tx_range)
            while True:
                nxt = farthest_in_range(pos, cur, tx_range)
                if nxt < 0:
                    break
                cur = nxt
                relays += 1
                delay_total += t_proc + t_access * _neighbor_count(pos, cur, tx_range)
            ncomp += 1
            relays_total += relays
            extent_total += pos[i] - pos[start] + tx_range
        i += 1
        start = i
    # end-to-end sampled process: greedy within coverage, next-vehicle across gaps
    cur = 0
    e2e_nodes = 1
    while True:
        nxt = farthest_in_range(pos, cur, tx_range)
        if nxt < 0:
            if cur + 1 >= n:
                break
            nxt = cur + 1
        cur = nxt
        e2e_nodes += 1
    return ncomp, relays_total, extent_total, delay_total, e2e_nodes


def sample_component_extents(lam, tx_range, count, seed):
    """Simulate ``count`` isolated components; return (sum, sum of squares).

    A component starts at a vehicle whose preceding gap exceeds the range
    and keeps accreting vehicles while exponential gaps stay within range.
    The extent is the covered interval (last - first + range).
    """
    rng = Rng(seed)
    total = 0.0
    total_sq = 0.0
    for _ in range(count):
        span = 0.0
        while True:
            g = rng.expovariate(lam)
            if g > tx_range:
                break
            span += g
        extent = span + tx_range
        total += extent
        total_sq += extent * extent
    return total, total_sq


def sample_hop_distances(lam, tx_range, count, seed):
    """First greedy hop distances on fresh Poisson roads (for kernel cross-checks).

    Draws the farthest-neighbor-within-range construction directly: vehicle
    positions ahead of the source are a Poisson process; the hop distance is
    the largest arrival within the range, conditioned on one existing.
    """
    rng = Rng(seed)
    out = []
    while len(out) < count:
        # generate arrivals in (0, range]; keep the largest
        x = 0.0
        best = -1.0
        while True:
            x += rng.expovariate(lam)
            if x > tx_range:
                break
            best = x
        if best > 0.0:
            out.append(best)
    return out
