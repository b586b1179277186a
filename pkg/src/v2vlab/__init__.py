"""v2vlab: 1-D highway V2V connectivity analytics and hybrid routing simulation.

The package pairs an analytical model of multi-hop connectivity on a
straight road (component-size law, expected hops, delay) with a Monte
Carlo road/routing simulator of greedy forwarding plus three dead-end
recovery strategies, and cross-validates the two.
"""

__version__ = "0.1.0"

from ._core import BACKEND as kernel_backend  # noqa: F401
from .connectivity import (  # noqa: F401
    ComponentDistribution,
    ConnectivityParams,
    HopKernel,
    TransformValue,
    analytic_delay,
    baseline_pmf_independent,
    component_pmf_oracle,
    expected_component_size,
    expected_hops_over_road,
    expected_retransmitters,
    hop_distance_cdf,
    m1_closed,
    m1_series,
    pmf_from_transform,
    q_transform,
)
from .experiments import (  # noqa: F401
    AggregateStats,
    ExperimentConfig,
    monte_carlo,
    persist,
    run_fig3,
    run_fig4,
)
from .routing import (  # noqa: F401
    DEAD_END,
    CELLULAR_DELIVERY,
    D2DOnDemand,
    D2DProactive,
    DelayModel,
    PureV2VBacktrack,
    RoutingOutcome,
    Scenario,
    greedy_next_hop,
    recover_backtrack,
    recover_d2d,
    route_v2v,
    run_hybrid,
    trace_lines,
)
from .traffic import (  # noqa: F401
    RoadSnapshot,
    TrafficParams,
    TruncatedNormal,
    advance,
    generate_snapshot,
    sample_speed,
    spatial_rate,
    truncated_normal_pdf,
)
