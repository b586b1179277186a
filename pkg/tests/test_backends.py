"""Cross-backend equivalence: the compiled core must match the pure-Python
reference bit for bit, and the shared special functions must hit their
accuracy pins."""

import numpy as np
import pytest
import scipy.special as ssp

from v2vlab import _core
from v2vlab._core import fallback as py

HAVE_C = _core.BACKEND == "c"
needs_c = pytest.mark.skipif(not HAVE_C, reason="compiled core not built")

ROAD_ARGS = (0.01, 8000.0, 25.0, 5.0, 20.0, 30.0)
HYBRID_ARGS = (0.01, 8000.0, 25.0, 5.0, 20.0, 30.0, 0.5, 200.0, 8000.0)
DELAYS = (0.002, 0.0005, 0.2, 0.0, 0.05, 0.01, 0.1)


def test_ndtri_accuracy_pin():
    # the rational fit must stay within 1e-12 of the reference everywhere
    ps = np.concatenate([
        np.linspace(1e-15, 1e-3, 2000),
        np.linspace(1e-3, 1.0 - 1e-3, 20000),
        np.linspace(1.0 - 1e-3, 1.0 - 1e-15, 2000),
    ])
    ref = ssp.ndtri(ps)
    mine = np.array([py.ndtri(float(p)) for p in ps])
    err = np.max(np.abs(mine - ref) / np.maximum(1.0, np.abs(ref)))
    assert err < 1e-12
    with pytest.raises(ValueError):
        py.ndtri(0.0)
    with pytest.raises(ValueError):
        py.ndtri(1.0)


@needs_c
def test_ndtri_backends_identical():
    for p in np.linspace(1e-12, 1 - 1e-12, 5001):
        assert _core.ndtri(float(p)) == py.ndtri(float(p))


@needs_c
def test_rng_streams_identical():
    seed = _core.derive_seed(987654321, 11)
    assert seed == py.derive_seed(987654321, 11)
    rc, rp = _core.Rng(seed), py.Rng(seed)
    for _ in range(5000):
        assert rc.uniform() == rp.uniform()
    for _ in range(500):
        assert rc.expovariate(0.013) == rp.expovariate(0.013)
    for _ in range(500):
        assert rc.trunc_normal(25.0, 5.0, 20.0, 30.0) == rp.trunc_normal(25.0, 5.0, 20.0, 30.0)
    for _ in range(200):
        assert rc.poisson(0.3) == rp.poisson(0.3)
    assert rc.state == rp.state


@needs_c
def test_generate_and_advance_identical():
    seed = _core.derive_seed(55, 0)
    rc, rp = _core.Rng(seed), py.Rng(seed)
    pc, sc = _core.generate_road(*ROAD_ARGS, rc)
    pp, sp_ = py.generate_road(*ROAD_ARGS, rp)
    assert pc == pp and sc == sp_
    ic, ip = list(range(len(pc))), list(range(len(pp)))
    nc = np = len(pc)
    for _ in range(50):
        nc = _core.advance_road(pc, sc, ic, 8000.0, 0.5, 0.5, 25.0, 5.0, 20.0, 30.0, rc, nc)
        np = py.advance_road(pp, sp_, ip, 8000.0, 0.5, 0.5, 25.0, 5.0, 20.0, 30.0, rp, np)
        assert pc == pp and sc == sp_ and ic == ip and nc == np


@needs_c
def test_route_and_walk_identical():
    seed = _core.derive_seed(56, 0)
    rc = _core.Rng(seed)
    pos, _ = _core.generate_road(*ROAD_ARGS, rc)
    a = _core.route_v2v(pos, 200.0, 8000.0, 0, 0.002, 0.0005, True)
    b = py.route_v2v(pos, 200.0, 8000.0, 0, 0.002, 0.0005, True)
    assert a == b
    assert _core.walk_components(pos, 200.0, 0.002, 0.0005) == py.walk_components(
        pos, 200.0, 0.002, 0.0005
    )


@needs_c
def test_hybrid_engine_identical_all_strategies():
    for strat in (0, 1, 2):
        for i in range(60):
            seed = _core.derive_seed(57, 100 * strat + i)
            a = _core.run_hybrid(*HYBRID_ARGS, strat, 4.0, 1, 30.0, 0.5, *DELAYS, seed, True)
            b = py.run_hybrid(*HYBRID_ARGS, strat, 4.0, 1, 30.0, 0.5, *DELAYS, seed, True)
            assert a == b


@needs_c
def test_samplers_identical():
    seed = _core.derive_seed(58, 0)
    assert _core.sample_component_extents(0.01, 200.0, 20000, seed) == \
        py.sample_component_extents(0.01, 200.0, 20000, seed)
    assert _core.sample_hop_distances(0.01, 200.0, 5000, seed) == \
        py.sample_hop_distances(0.01, 200.0, 5000, seed)
