# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled simulation kernels.

Line-for-line mirror of ``fallback.py``: same scalar algorithms, same
sequence of libm calls, compiled without FP contraction, so results are
bit-identical with the pure-Python backend.  See the fallback module for
the algorithm commentary.
"""

from libc.math cimport erfc, exp, log, log1p, sqrt
from libc.stdlib cimport free, malloc, realloc

BACKEND_NAME = "c"

cdef unsigned long long _GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double _INV_2_53 = 1.0 / 9007199254740992.0

EV_SRC = 0
EV_HOP = 1
EV_DEADEND = 2
EV_BACK = 3
EV_CARRY = 4
EV_D2D = 5
EV_CELL = 6
EV_RSU = 7

MODE_NONE = 0
MODE_V2V = 1
MODE_D2D = 2
MODE_CELL = 3

STRAT_BACKTRACK = 0
STRAT_D2D_ON_DEMAND = 1
STRAT_D2D_PROACTIVE = 2

cdef int C_EV_SRC = 0
cdef int C_EV_HOP = 1
cdef int C_EV_DEADEND = 2
cdef int C_EV_BACK = 3
cdef int C_EV_CARRY = 4
cdef int C_EV_D2D = 5
cdef int C_EV_CELL = 6
cdef int C_EV_RSU = 7
cdef int C_MODE_NONE = 0
cdef int C_MODE_V2V = 1
cdef int C_MODE_D2D = 2
cdef int C_MODE_CELL = 3
cdef int C_STRAT_BACKTRACK = 0
cdef int C_STRAT_D2D_ON_DEMAND = 1
cdef int C_STRAT_D2D_PROACTIVE = 2


cdef inline unsigned long long _mix64(unsigned long long x) noexcept nogil:
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL
    return x ^ (x >> 31)


def derive_seed(master, index):
    """Stable child-seed derivation: mixes (master, index) into a fresh seed."""
    cdef unsigned long long m = <unsigned long long> (master & 0xFFFFFFFFFFFFFFFF)
    cdef unsigned long long ix = <unsigned long long> ((index + 1) & 0xFFFFFFFFFFFFFFFF)
    cdef unsigned long long s = m + ix * _GOLDEN
    return _mix64(_mix64(s) ^ _GOLDEN)


cdef class Rng:
    """splitmix64 stream with the distribution helpers the kernels need."""

    cdef unsigned long long _state

    def __init__(self, seed):
        self._state = <unsigned long long> (seed & 0xFFFFFFFFFFFFFFFF)

    @property
    def state(self):
        return self._state

    @state.setter
    def state(self, value):
        self._state = <unsigned long long> (value & 0xFFFFFFFFFFFFFFFF)

    cdef inline unsigned long long _u64(self) noexcept nogil:
        self._state += _GOLDEN
        return _mix64(self._state)

    def u64(self):
        return self._u64()

    cdef inline double _uniform(self) noexcept nogil:
        return <double> (self._u64() >> 11) * _INV_2_53

    def uniform(self):
        """Uniform double in [0, 1)."""
        return self._uniform()

    cdef inline double _expovariate(self, double rate) noexcept nogil:
        cdef double g = -log1p(-self._uniform()) / rate
        while g == 0.0:
            g = -log1p(-self._uniform()) / rate
        return g

    def expovariate(self, rate):
        """Exponential with the given rate (strictly positive values)."""
        return self._expovariate(rate)

    cdef long _poisson(self, double mean) except -1:
        if mean > 100.0:
            raise ValueError("poisson(mean > 100) not supported by this sampler")
        cdef double limit = exp(-mean)
        cdef long k = 0
        cdef double p = 1.0
        while True:
            p *= self._uniform()
            if p <= limit:
                return k
            k += 1

    def poisson(self, mean):
        """Poisson count via Knuth's product method (small means only)."""
        return self._poisson(mean)

    cdef inline double _trunc_normal(self, double mu, double sigma, double lo,
                                     double hi) noexcept nogil:
        cdef double sqrt2 = sqrt(2.0)
        cdef double p_lo = 0.5 * erfc(-((lo - mu) / sigma) / sqrt2)
        cdef double p_hi = 0.5 * erfc(-((hi - mu) / sigma) / sqrt2)
        cdef double p = p_lo + self._uniform() * (p_hi - p_lo)
        cdef double x = mu + sigma * _ndtri(p)
        if x < lo:
            x = lo
        elif x > hi:
            x = hi
        return x

    def trunc_normal(self, mu, sigma, lo, hi):
        """Truncated-normal draw by inverse CDF on the restricted range."""
        return self._trunc_normal(mu, sigma, lo, hi)


cdef double _ndtri(double p) noexcept nogil:
    cdef double q = p - 0.5
    cdef double r, num, den, x
    if q <= 0.425 and q >= -0.425:
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
    if q < 0.0:
        r = p
    else:
        r = 1.0 - p
    r = sqrt(-log(r))
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
    if q < 0.0:
        return -x
    return x


def ndtri(p):
    """Inverse standard-normal CDF, Wichura's AS241 double-precision fit."""
    if p <= 0.0 or p >= 1.0:
        raise ValueError("ndtri requires 0 < p < 1")
    return _ndtri(p)


# ---------------------------------------------------------------------------
# growable parallel arrays for the road state


cdef struct Road:
    double* pos
    double* spd
    long long* ids
    Py_ssize_t n
    Py_ssize_t cap


cdef int _road_init(Road* r, Py_ssize_t cap) except -1:
    if cap < 16:
        cap = 16
    r.pos = <double*> malloc(cap * sizeof(double))
    r.spd = <double*> malloc(cap * sizeof(double))
    r.ids = <long long*> malloc(cap * sizeof(long long))
    if r.pos == NULL or r.spd == NULL or r.ids == NULL:
        _road_free(r)
        raise MemoryError()
    r.n = 0
    r.cap = cap
    return 0


cdef void _road_free(Road* r) noexcept:
    if r.pos != NULL:
        free(r.pos)
        r.pos = NULL
    if r.spd != NULL:
        free(r.spd)
        r.spd = NULL
    if r.ids != NULL:
        free(r.ids)
        r.ids = NULL
    r.n = 0
    r.cap = 0


cdef int _road_grow(Road* r) except -1:
    cdef Py_ssize_t cap = r.cap * 2
    cdef double* p = <double*> realloc(r.pos, cap * sizeof(double))
    if p == NULL:
        raise MemoryError()
    r.pos = p
    p = <double*> realloc(r.spd, cap * sizeof(double))
    if p == NULL:
        raise MemoryError()
    r.spd = p
    cdef long long* q = <long long*> realloc(r.ids, cap * sizeof(long long))
    if q == NULL:
        raise MemoryError()
    r.ids = q
    r.cap = cap
    return 0


cdef inline int _road_push(Road* r, double pos, double spd, long long vid) except -1:
    if r.n == r.cap:
        _road_grow(r)
    r.pos[r.n] = pos
    r.spd[r.n] = spd
    r.ids[r.n] = vid
    r.n += 1
    return 0


# ---------------------------------------------------------------------------
# road generation and mobility


cdef int _generate_road(Road* road, double lam, double length, double mu,
                        double sigma, double vmin, double vmax, Rng rng) except -1:
    cdef double x = 0.0
    while True:
        x += rng._expovariate(lam)
        if x > length:
            break
        _road_push(road, x, rng._trunc_normal(mu, sigma, vmin, vmax), road.n)
    return 0


def generate_road(lam, length, mu, sigma, vmin, vmax, Rng rng):
    """Poisson road on (0, length]: exponential gaps, i.i.d. truncated-normal speeds."""
    cdef Road road
    _road_init(&road, 64)
    cdef Py_ssize_t i
    try:
        _generate_road(&road, lam, length, mu, sigma, vmin, vmax, rng)
        positions = [road.pos[i] for i in range(road.n)]
        speeds = [road.spd[i] for i in range(road.n)]
        return positions, speeds
    finally:
        _road_free(&road)


cdef void _sort_by_position(Road* r) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double p, s
    cdef long long d
    for i in range(1, r.n):
        p = r.pos[i]
        s = r.spd[i]
        d = r.ids[i]
        j = i - 1
        while j >= 0 and r.pos[j] > p:
            r.pos[j + 1] = r.pos[j]
            r.spd[j + 1] = r.spd[j]
            r.ids[j + 1] = r.ids[j]
            j -= 1
        r.pos[j + 1] = p
        r.spd[j + 1] = s
        r.ids[j + 1] = d


cdef long long _advance_road(Road* r, double length, double dt, double lambda_a,
                             double mu, double sigma, double vmin, double vmax,
                             Rng rng, long long next_id) except -1:
    cdef Py_ssize_t i, w = 0
    cdef double p, u, v
    cdef long k
    for i in range(r.n):
        p = r.pos[i] + r.spd[i] * dt
        if p <= length:
            r.pos[w] = p
            r.spd[w] = r.spd[i]
            r.ids[w] = r.ids[i]
            w += 1
    r.n = w
    k = rng._poisson(lambda_a * dt)
    for i in range(k):
        u = rng._uniform()
        v = rng._trunc_normal(mu, sigma, vmin, vmax)
        p = (dt - u * dt) * v
        if p <= length:
            _road_push(r, p, v, next_id)
            next_id += 1
    _sort_by_position(r)
    return next_id


def advance_road(pos, spd, ids, length, dt, lambda_a, mu, sigma, vmin, vmax,
                 Rng rng, next_id):
    """One mobility step on the three parallel lists (mutated in place)."""
    cdef Road road
    cdef Py_ssize_t i, n = len(pos)
    _road_init(&road, n + 16)
    cdef long long nid
    try:
        for i in range(n):
            _road_push(&road, pos[i], spd[i], ids[i])
        nid = _advance_road(&road, length, dt, lambda_a, mu, sigma, vmin, vmax,
                            rng, next_id)
        pos[:] = [road.pos[i] for i in range(road.n)]
        spd[:] = [road.spd[i] for i in range(road.n)]
        ids[:] = [road.ids[i] for i in range(road.n)]
        return nid
    finally:
        _road_free(&road)


# ---------------------------------------------------------------------------
# search helpers


cdef inline Py_ssize_t _rightmost_le(double* pos, Py_ssize_t n, double value) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) // 2
        if pos[mid] <= value:
            lo = mid + 1
        else:
            hi = mid
    return lo - 1


cdef inline Py_ssize_t _leftmost_ge(double* pos, Py_ssize_t n, double value) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) // 2
        if pos[mid] < value:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef inline Py_ssize_t _neighbor_count(double* pos, Py_ssize_t n, Py_ssize_t i,
                                       double reach) noexcept nogil:
    cdef double x = pos[i]
    return _rightmost_le(pos, n, x + reach) - _leftmost_ge(pos, n, x - reach)


cdef inline Py_ssize_t _farthest_in_range(double* pos, Py_ssize_t n, Py_ssize_t i,
                                          double reach) noexcept nogil:
    cdef Py_ssize_t j = _rightmost_le(pos, n, pos[i] + reach)
    if j > i and pos[j] > pos[i]:
        return j
    return -1


def farthest_in_range(pos, i, reach):
    """Greedy next hop: rightmost index with pos in (pos[i], pos[i]+reach], or -1."""
    cdef Py_ssize_t n = len(pos)
    cdef double* buf = <double*> malloc(n * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef Py_ssize_t k
    try:
        for k in range(n):
            buf[k] = pos[k]
        return _farthest_in_range(buf, n, i, reach)
    finally:
        free(buf)


# ---------------------------------------------------------------------------
# static-snapshot forwarding


def route_v2v(pos_list, tx_range, rsu, source, t_proc, t_access, collect_trace):
    """Greedy forwarding on a frozen snapshot (see fallback for semantics)."""
    cdef Py_ssize_t n = len(pos_list)
    cdef double* pos = <double*> malloc(n * sizeof(double))
    if pos == NULL:
        raise MemoryError()
    cdef Py_ssize_t i, cur, nxt
    cdef double t = 0.0, r_ = rsu, reach = tx_range, tp = t_proc, ta = t_access
    cdef long hops = 0
    cdef bint delivered = False, on = collect_trace
    t_ids = []
    t_evs = []
    t_ts = []
    t_pos = []
    try:
        for i in range(n):
            pos[i] = pos_list[i]
        cur = source
        if on:
            t_ids.append(cur)
            t_evs.append(C_EV_SRC)
            t_ts.append(0.0)
            t_pos.append(pos[cur])
        while True:
            if r_ - pos[cur] < reach:
                delivered = True
                if on:
                    t_ids.append(-1)
                    t_evs.append(C_EV_RSU)
                    t_ts.append(t)
                    t_pos.append(r_)
                break
            nxt = _farthest_in_range(pos, n, cur, reach)
            if nxt < 0:
                if on:
                    t_ids.append(cur)
                    t_evs.append(C_EV_DEADEND)
                    t_ts.append(t)
                    t_pos.append(pos[cur])
                break
            t += tp + ta * _neighbor_count(pos, n, cur, reach)
            cur = nxt
            hops += 1
            if on:
                t_ids.append(cur)
                t_evs.append(C_EV_HOP)
                t_ts.append(t)
                t_pos.append(pos[cur])
        return delivered, hops, t, cur, t_ids, t_evs, t_ts, t_pos
    finally:
        free(pos)


# ---------------------------------------------------------------------------
# hybrid routing engine


cdef inline Py_ssize_t _index_of_id(Road* r, long long vid) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(r.n):
        if r.ids[i] == vid:
            return i
    return -1


cdef bint _chain_resolves(Road* r, Py_ssize_t i, double reach, long long frontier_id,
                          double rsu) noexcept nogil:
    cdef Py_ssize_t cur = i, nxt
    cdef bint moved = False
    while True:
        if rsu - r.pos[cur] < reach:
            return True
        nxt = _farthest_in_range(r.pos, r.n, cur, reach)
        if nxt < 0:
            return moved and r.ids[cur] != frontier_id
        cur = nxt
        moved = True


cdef class _Engine:
    """Mutable accounting shared between the main loop and recovery."""

    cdef public double t, carry_time, sim_clock
    cdef public long backward_hops
    cdef public long long next_id
    cdef public bint carried_out
    # scenario constants
    cdef double tx_range, rsu, road_len, t_proc, t_access, time_budget, carry_dt
    cdef double lambda_a, mu, sigma, vmin, vmax
    cdef long max_back_hops
    cdef bint trace_on
    cdef list t_ids, t_evs, t_ts, t_pos

    cdef inline void trace(self, long long vid, int ev, double ts, double x):
        if self.trace_on:
            self.t_ids.append(vid)
            self.t_evs.append(ev)
            self.t_ts.append(ts)
            self.t_pos.append(x)


cdef Py_ssize_t _backtrack_recover(Road* r, Py_ssize_t cur, list chain,
                                   long long frontier_id, _Engine st, Rng rng,
                                   bint new_episode) except -3:
    cdef double tp = st.t_proc, ta = st.t_access, reach = st.tx_range, rsu = st.rsu
    cdef long backs = 0
    cdef long long prev_id, holder_id
    cdef Py_ssize_t j
    cdef double dt = st.carry_dt
    while new_episode and backs < st.max_back_hops and len(chain) >= 2:
        chain.pop()
        prev_id = chain[len(chain) - 1]
        j = _index_of_id(r, prev_id)
        if j < 0:
            continue
        st.t += tp + ta * _neighbor_count(r.pos, r.n, cur, reach)
        cur = j
        st.backward_hops += 1
        backs += 1
        st.trace(prev_id, C_EV_BACK, st.t, r.pos[cur])
        if _chain_resolves(r, cur, reach, frontier_id, rsu):
            return cur
    while st.sim_clock + dt <= st.time_budget + 1e-12:
        holder_id = r.ids[cur]
        st.next_id = _advance_road(r, st.road_len, dt, st.lambda_a, st.mu, st.sigma,
                                   st.vmin, st.vmax, rng, st.next_id)
        st.sim_clock += dt
        st.carry_time += dt
        st.t += dt
        cur = _index_of_id(r, holder_id)
        st.trace(holder_id, C_EV_CARRY, st.t,
                 r.pos[cur] if cur >= 0 else st.road_len)
        if cur < 0:
            st.carried_out = True
            return -2
        if st.rsu - r.pos[cur] < reach:
            return cur
        if _chain_resolves(r, cur, reach, frontier_id, rsu):
            return cur
    return -1


def run_hybrid(lam, road_len, mu, sigma, vmin, vmax, lambda_a,
               tx_range, rsu, strategy, d2d_factor, max_back_hops, time_budget,
               carry_dt, t_proc, t_access, t_disc_od, t_disc_pro, t_setup,
               t_d2d_tx, t_cell, seed, collect_trace):
    """Generate a road and route one message (see fallback for semantics)."""
    cdef Rng rng = Rng(seed)
    cdef Road road
    _road_init(&road, 64)
    cdef _Engine st = _Engine()
    cdef Py_ssize_t cur, nxt, bridge
    cdef long forward_hops = 0, d2d_links = 0, deadends = 0
    cdef int strat = strategy
    cdef double factor = d2d_factor, reach = tx_range, rsu_ = rsu
    cdef double tp = t_proc, ta = t_access, disc
    cdef long long frontier_id = -1
    cdef bint delivered = False, new_episode
    cdef int mode = C_MODE_NONE
    try:
        _generate_road(&road, lam, road_len, mu, sigma, vmin, vmax, rng)
        if road.n == 0:
            return (False, C_MODE_NONE, 0, 0, 0, 0.0, 0.0, 0, [], [], [], [])
        st.t = 0.0
        st.carry_time = 0.0
        st.sim_clock = 0.0
        st.backward_hops = 0
        st.next_id = road.n
        st.carried_out = False
        st.tx_range = reach
        st.rsu = rsu_
        st.road_len = road_len
        st.t_proc = tp
        st.t_access = ta
        st.max_back_hops = max_back_hops
        st.time_budget = time_budget
        st.carry_dt = carry_dt
        st.lambda_a = lambda_a
        st.mu = mu
        st.sigma = sigma
        st.vmin = vmin
        st.vmax = vmax
        st.trace_on = collect_trace
        st.t_ids = []
        st.t_evs = []
        st.t_ts = []
        st.t_pos = []
        cur = 0
        chain = [road.ids[cur]]
        st.trace(road.ids[cur], C_EV_SRC, 0.0, road.pos[cur])
        while True:
            if rsu_ - road.pos[cur] < reach:
                delivered = True
                mode = C_MODE_D2D if d2d_links > 0 else C_MODE_V2V
                st.trace(-1, C_EV_RSU, st.t, rsu_)
                break
            nxt = _farthest_in_range(road.pos, road.n, cur, reach)
            if nxt >= 0:
                st.t += tp + ta * _neighbor_count(road.pos, road.n, cur, reach)
                cur = nxt
                forward_hops += 1
                chain.append(road.ids[cur])
                st.trace(road.ids[cur], C_EV_HOP, st.t, road.pos[cur])
                continue
            new_episode = road.ids[cur] != frontier_id
            if new_episode:
                frontier_id = road.ids[cur]
                deadends += 1
                st.trace(road.ids[cur], C_EV_DEADEND, st.t, road.pos[cur])
            if strat == C_STRAT_D2D_ON_DEMAND or strat == C_STRAT_D2D_PROACTIVE:
                bridge = _farthest_in_range(road.pos, road.n, cur, factor * reach)
                disc = t_disc_od if strat == C_STRAT_D2D_ON_DEMAND else t_disc_pro
                if bridge >= 0:
                    st.t += disc + t_setup + t_d2d_tx
                    cur = bridge
                    d2d_links += 1
                    chain.append(road.ids[cur])
                    st.trace(road.ids[cur], C_EV_D2D, st.t, road.pos[cur])
                    continue
                st.t += t_cell
                delivered = True
                mode = C_MODE_CELL
                st.trace(-2, C_EV_CELL, st.t, road.pos[cur])
                break
            cur = _backtrack_recover(&road, cur, chain, frontier_id, st, rng,
                                     new_episode)
            if cur == -1:
                break
            if cur == -2 or st.carried_out:
                delivered = True
                mode = C_MODE_V2V
                st.trace(-1, C_EV_RSU, st.t, rsu_)
                break
            if chain[len(chain) - 1] != road.ids[cur]:
                chain.append(road.ids[cur])
        return (
            delivered, mode, forward_hops, st.backward_hops, d2d_links,
            st.carry_time, st.t, deadends, st.t_ids, st.t_evs, st.t_ts, st.t_pos,
        )
    finally:
        _road_free(&road)


# ---------------------------------------------------------------------------
# component statistics


def walk_components(pos_list, tx_range, t_proc, t_access):
    """Greedy-walk every complete component (see fallback for semantics)."""
    cdef Py_ssize_t n = len(pos_list)
    cdef long ncomp = 0
    cdef long long relays_total = 0, e2e_nodes = 0
    cdef double extent_total = 0.0, delay_total = 0.0
    cdef double reach = tx_range, tp = t_proc, ta = t_access
    cdef Py_ssize_t i, start, cur, nxt
    cdef long relays
    if n == 0:
        return 0, 0, 0.0, 0.0, 0
    cdef double* pos = <double*> malloc(n * sizeof(double))
    if pos == NULL:
        raise MemoryError()
    try:
        for i in range(n):
            pos[i] = pos_list[i]
        start = 0
        i = 0
        while i < n:
            if i + 1 < n and pos[i + 1] - pos[i] <= reach:
                i += 1
                continue
            if i + 1 < n:
                cur = start
                relays = 1
                delay_total += tp + ta * _neighbor_count(pos, n, cur, reach)
                while True:
                    nxt = _farthest_in_range(pos, n, cur, reach)
                    if nxt < 0:
                        break
                    cur = nxt
                    relays += 1
                    delay_total += tp + ta * _neighbor_count(pos, n, cur, reach)
                ncomp += 1
                relays_total += relays
                extent_total += pos[i] - pos[start] + reach
            i += 1
            start = i
        cur = 0
        e2e_nodes = 1
        while True:
            nxt = _farthest_in_range(pos, n, cur, reach)
            if nxt < 0:
                if cur + 1 >= n:
                    break
                nxt = cur + 1
            cur = nxt
            e2e_nodes += 1
        return ncomp, relays_total, extent_total, delay_total, e2e_nodes
    finally:
        free(pos)


def sample_component_extents(lam, tx_range, count, seed):
    """Simulate ``count`` isolated components; return (sum, sum of squares)."""
    cdef Rng rng = Rng(seed)
    cdef double total = 0.0, total_sq = 0.0, span, g, extent
    cdef double rate = lam, reach = tx_range
    cdef long long i, cnt = count
    for i in range(cnt):
        span = 0.0
        while True:
            g = rng._expovariate(rate)
            if g > reach:
                break
            span += g
        extent = span + reach
        total += extent
        total_sq += extent * extent
    return total, total_sq


def sample_hop_distances(lam, tx_range, count, seed):
    """First greedy hop distances via the farthest-neighbor construction."""
    cdef Rng rng = Rng(seed)
    cdef double rate = lam, reach = tx_range, x, best
    out = []
    while len(out) < count:
        x = 0.0
        best = -1.0
        while True:
            x += rng._expovariate(rate)
            if x > reach:
                break
            best = x
        if best > 0.0:
            out.append(best)
    return out
