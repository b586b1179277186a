"""Kernel backend selection.

The hot simulation loops exist twice: a compiled Cython core
(``_speedups``) and a pure-Python reference (``fallback``).  Both are
bit-identical by construction; the compiled one is simply faster.  The
environment variable ``V2VLAB_BACKEND`` forces the choice:

* ``auto`` (default): compiled core when importable, else pure Python;
* ``c``: compiled core, raising if it is missing;
* ``py``: pure Python.
"""

import os as _os

_requested = _os.environ.get("V2VLAB_BACKEND", "auto").strip().lower()

if _requested in ("c", "compiled", "ext"):
    from . import _speedups as _impl

    BACKEND = "c"
elif _requested in ("py", "python", "fallback"):
    from . import fallback as _impl

    BACKEND = "python"
elif _requested == "auto":
    try:
        from . import _speedups as _impl

        BACKEND = "c"
    except ImportError:
        from . import fallback as _impl

        BACKEND = "python"
else:
    raise EnvironmentError(
        f"V2VLAB_BACKEND={_requested!r} not understood (use 'auto', 'c' or 'py')"
    )

Rng = _impl.Rng
derive_seed = _impl.derive_seed
ndtri = _impl.ndtri
generate_road = _impl.generate_road
advance_road = _impl.advance_road
route_v2v = _impl.route_v2v
run_hybrid = _impl.run_hybrid
walk_components = _impl.walk_components
sample_component_extents = _impl.sample_component_extents
sample_hop_distances = _impl.sample_hop_distances
farthest_in_range = _impl.farthest_in_range

EV_SRC = _impl.EV_SRC
EV_HOP = _impl.EV_HOP
EV_DEADEND = _impl.EV_DEADEND
EV_BACK = _impl.EV_BACK
EV_CARRY = _impl.EV_CARRY
EV_D2D = _impl.EV_D2D
EV_CELL = _impl.EV_CELL
EV_RSU = _impl.EV_RSU

MODE_NONE = _impl.MODE_NONE
MODE_V2V = _impl.MODE_V2V
MODE_D2D = _impl.MODE_D2D
MODE_CELL = _impl.MODE_CELL

STRAT_BACKTRACK = _impl.STRAT_BACKTRACK
STRAT_D2D_ON_DEMAND = _impl.STRAT_D2D_ON_DEMAND
STRAT_D2D_PROACTIVE = _impl.STRAT_D2D_PROACTIVE

__all__ = [
    "BACKEND", "Rng", "derive_seed", "ndtri", "generate_road", "advance_road",
    "route_v2v", "run_hybrid", "walk_components", "sample_component_extents",
    "sample_hop_distances", "farthest_in_range",
]
