"""Chase-escape malware dynamics on mobile device-to-device street networks.

The package builds the model bottom-up: random street systems (``streets``),
devices sampled on them (``points``), bouncing waypoint trajectories
(``mobility``), exact pairwise contact windows and the static connectivity
graph (``contact``), the event-driven chase-escape engine (``epidemic``),
its mean-field variant on the static graph (``staticgraph``), and a seeded
Monte Carlo harness (``experiments``).
"""

__version__ = "0.3.0"

from .distributions import TimeDistribution, scale_distribution
from .errors import (
    CalibrationError,
    ChasescapeError,
    ConfigError,
    InvalidParameterError,
    MissingContactError,
    NoPathError,
    ResampleSignal,
)
from .geometry import Window
from .streets import (
    SegmentSystem,
    StreetGraph,
    StreetPoint,
    build_graph,
    crossing_probability,
    generate_manhattan,
    generate_pdt,
    generate_pvt,
    normalize_intensity,
    thin_by_length,
)
from .routing import shortest_path
from .points import PointConfig, root_typical, sample_cox
from .mobility import (
    SpeedDistribution,
    Trajectory,
    UniformBallKernel,
    build_trajectory,
)
from .contact import (
    ConnectivityGraph,
    ContactSet,
    ContactStore,
    build_connectivity_graph,
    contact_intervals,
    geo_degree_bound,
    has_edge,
)
from .epidemic import (
    EpidemicTrace,
    TimerTable,
    draw_pair_timers,
    simulate_dynamic,
    survival_verdict,
)
from .staticgraph import (
    StaticScenario,
    good_device_probability,
    reach_bound,
    simulate_static,
    thin_graph,
)
from .experiments import Scenario, percolation_diagnostics, run_replicas, sweep

__all__ = [
    "CalibrationError",
    "ChasescapeError",
    "ConfigError",
    "ConnectivityGraph",
    "ContactSet",
    "ContactStore",
    "EpidemicTrace",
    "InvalidParameterError",
    "MissingContactError",
    "NoPathError",
    "PointConfig",
    "ResampleSignal",
    "Scenario",
    "SegmentSystem",
    "SpeedDistribution",
    "StaticScenario",
    "StreetGraph",
    "StreetPoint",
    "TimeDistribution",
    "TimerTable",
    "Trajectory",
    "UniformBallKernel",
    "Window",
    "build_connectivity_graph",
    "build_graph",
    "build_trajectory",
    "contact_intervals",
    "crossing_probability",
    "draw_pair_timers",
    "generate_manhattan",
    "generate_pdt",
    "generate_pvt",
    "geo_degree_bound",
    "good_device_probability",
    "has_edge",
    "normalize_intensity",
    "percolation_diagnostics",
    "reach_bound",
    "root_typical",
    "run_replicas",
    "sample_cox",
    "scale_distribution",
    "shortest_path",
    "simulate_dynamic",
    "simulate_static",
    "survival_verdict",
    "sweep",
    "thin_by_length",
    "thin_graph",
]
