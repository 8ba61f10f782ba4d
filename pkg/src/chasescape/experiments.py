"""Monte Carlo harness: scenarios, replicas, sweeps and diagnostics.

A scenario bundles every model parameter plus one master seed.  All
randomness flows from that seed through named substreams keyed by
(stream, replica index, attempt), so results are reproducible and
independent of execution order or parallelism; a sweep reuses the same
replica seeds at every axis value (common random numbers).
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .contact import ConnectivityGraph, ContactStore, build_connectivity_graph
from .distributions import TimeDistribution
from .epidemic import (
    VERDICT_EXTINCT,
    VERDICT_GLOBAL,
    VERDICT_LOCAL,
    TimerTable,
    simulate_dynamic,
    survival_verdict,
)
from .errors import InvalidParameterError, ResampleSignal
from .geometry import Window
from .mobility import SpeedDistribution, UniformBallKernel, build_trajectory
from .points import ROLE_KNIGHT, assemble_config, root_typical, sample_cox
from .staticgraph import StaticScenario, simulate_static
from .streets import (
    build_graph,
    generate_manhattan,
    generate_pdt,
    generate_pvt,
    wilson_interval,
)

log = logging.getLogger(__name__)

VERDICT_SKIPPED = "skipped"
VERDICTS = (VERDICT_EXTINCT, VERDICT_LOCAL, VERDICT_GLOBAL, VERDICT_SKIPPED)

# Named substreams hanging off the master seed.
STREAMS = {
    "streets": 1,
    "devices": 2,
    "knights": 3,
    "targets": 4,
    "speeds": 5,
    "thinning": 6,
    "replicas": 7,
    "calibration": 8,
    "timers_infect": 11,
    "timers_patch": 12,
    "static_timers": 13,
}

MAX_ROOT_ATTEMPTS = 10


def substream(master_seed: int, name: str, *extra: int) -> np.random.Generator:
    """Independent generator for one named stream of a master seed."""
    return np.random.default_rng(
        (int(master_seed) & 0xFFFFFFFFFFFFFFFF, STREAMS[name]) + tuple(extra)
    )


# ---------------------------------------------------------------------------
# Scenario
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    """Every model parameter of one experiment, hash-stable."""

    generator: str = "pvt"
    gamma: float = 0.25          # seed intensity; grid spacing for manhattan
    window_side: float = 30.0
    buffer: float | None = None  # None: max(3/sqrt(gamma), 2 * kernel radius)
    lam: float = 1.0             # devices per unit street length
    lam_knight: float = 0.0      # white knights per unit street length
    speed: SpeedDistribution = field(
        default_factory=lambda: SpeedDistribution.dirac(1.0)
    )
    kernel_radius: float = 2.0   # waypoint ball radius
    r: float = 0.5               # contact distance threshold
    dist_infect: TimeDistribution = field(
        default_factory=lambda: TimeDistribution.uniform(0.5, 1.5)
    )
    dist_patch: TimeDistribution = field(
        default_factory=lambda: TimeDistribution.uniform(1.0, 2.0)
    )
    b: float = 1.0               # infection speed-up for the static engine
    rho: float = 0.5             # connection time of the static graph
    horizon: float | None = None     # None: 20 * minimal infection time
    reach_radius: float | None = None  # None: 0.4 * window_side
    engine: str = "dynamic"
    master_seed: int = 1

    def __post_init__(self):
        if self.generator not in ("pvt", "pdt", "manhattan"):
            raise InvalidParameterError(f"unknown generator {self.generator!r}")
        if self.engine not in ("dynamic", "static"):
            raise InvalidParameterError(f"unknown engine {self.engine!r}")
        for name in ("gamma", "window_side", "kernel_radius", "r", "rho", "b"):
            value = getattr(self, name)
            if name == "rho":
                if value < 0.0:
                    raise InvalidParameterError(f"{name} must be >= 0, got {value}")
            elif value <= 0.0:
                raise InvalidParameterError(f"{name} must be positive, got {value}")
        for name in ("lam", "lam_knight"):
            if getattr(self, name) < 0.0:
                raise InvalidParameterError(f"{name} must be >= 0, got {getattr(self, name)}")

    # -- derived defaults --------------------------------------------------

    def resolved_buffer(self) -> float:
        if self.buffer is not None:
            return self.buffer
        if self.generator == "manhattan":
            return 0.0
        return max(3.0 / np.sqrt(self.gamma), 2.0 * self.kernel_radius)

    def resolved_horizon(self) -> float:
        if self.horizon is not None:
            return self.horizon
        base = self.dist_infect.min_support
        if base <= 0.0:
            base = self.dist_infect.mean()
        return 20.0 * base

    def resolved_reach_radius(self) -> float:
        if self.reach_radius is not None:
            return self.reach_radius
        return 0.4 * self.window_side

    def with_value(self, axis: str, value) -> "Scenario":
        if axis not in SWEEP_AXES:
            raise InvalidParameterError(
                f"unknown sweep axis {axis!r}; known: {sorted(SWEEP_AXES)}"
            )
        return SWEEP_AXES[axis](self, value)

    # -- serialization -------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "generator": self.generator,
            "gamma": self.gamma,
            "window_side": self.window_side,
            "buffer": self.buffer,
            "lam": self.lam,
            "lam_knight": self.lam_knight,
            "speed": {"kind": self.speed.kind, "v_min": self.speed.v_min,
                      "v_max": self.speed.v_max},
            "kernel_radius": self.kernel_radius,
            "r": self.r,
            "dist_infect": self.dist_infect.to_json_dict(),
            "dist_patch": self.dist_patch.to_json_dict(),
            "b": self.b,
            "rho": self.rho,
            "horizon": self.horizon,
            "reach_radius": self.reach_radius,
            "engine": self.engine,
            "master_seed": self.master_seed,
        }

    def hash(self) -> str:
        blob = json.dumps(self.to_json_dict(), sort_keys=True,
                          separators=(",", ":"), default=repr)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


SWEEP_AXES = {
    "lam": lambda s, v: replace(s, lam=float(v)),
    "lam_knight": lambda s, v: replace(s, lam_knight=float(v)),
    "speed": lambda s, v: replace(s, speed=SpeedDistribution.dirac(float(v))),
    "r": lambda s, v: replace(s, r=float(v)),
    "rho": lambda s, v: replace(s, rho=float(v)),
    "kernel_radius": lambda s, v: replace(s, kernel_radius=float(v)),
    "b": lambda s, v: replace(s, b=float(v)),
    "gamma": lambda s, v: replace(s, gamma=float(v)),
    "window_side": lambda s, v: replace(s, window_side=float(v)),
    "horizon": lambda s, v: replace(s, horizon=float(v)),
}


# ---------------------------------------------------------------------------
# One replica
# ---------------------------------------------------------------------------

@dataclass
class Realization:
    """Everything produced for one replica before the epidemic verdict."""

    config: object
    trajectories: dict
    store: ContactStore
    graph_rho: ConnectivityGraph
    positions: dict


def realize(scenario: Scenario, replica: int, attempt: int = 0) -> Realization:
    """Streets, devices, trajectories, contacts and the static graph for
    one (replica, attempt) pair.  Raises ResampleSignal if rooting fails."""
    window = Window.centered(scenario.window_side)
    seed = scenario.master_seed
    rng_streets = substream(seed, "streets", replica, attempt)
    if scenario.generator == "pvt":
        system = generate_pvt(scenario.gamma, window, rng_streets,
                              scenario.resolved_buffer())
    elif scenario.generator == "pdt":
        system = generate_pdt(scenario.gamma, window, rng_streets,
                              scenario.resolved_buffer())
    else:
        system = generate_manhattan(scenario.gamma, window)
    graph = build_graph(system)

    device_pts = sample_cox(graph, scenario.lam,
                            substream(seed, "devices", replica, attempt))
    knight_pts = sample_cox(graph, scenario.lam_knight,
                            substream(seed, "knights", replica, attempt))
    config = assemble_config(graph, device_pts, knight_pts,
                             scenario.lam, scenario.lam_knight)
    rooted = root_typical(config, window)
    graph = rooted.graph

    horizon = scenario.resolved_horizon()
    kernel = UniformBallKernel(scenario.kernel_radius)
    rng_targets = substream(seed, "targets", replica, attempt)
    rng_speeds = substream(seed, "speeds", replica, attempt)
    trajectories = {}
    for d in rooted.devices:
        target = kernel.sample(graph, d.point, rng_targets)
        v = float(scenario.speed.sample(rng_speeds))
        trajectories[d.id] = build_trajectory(
            graph, d.point, target, v, horizon, rng_targets, d.id
        )
    store = ContactStore.from_trajectories(trajectories, scenario.r, horizon)
    positions = {d.id: d.position(graph) for d in rooted.devices}
    graph_rho = build_connectivity_graph(
        store, scenario.rho, vertices=sorted(trajectories),
        positions=positions, r=scenario.r,
    )
    return Realization(rooted, trajectories, store, graph_rho, positions)


@dataclass
class ReplicaResult:
    replica: int
    verdict: str
    attempts: int
    n_devices: int = 0
    n_edges: int = 0
    largest_fraction: float = 0.0
    n_events: int = 0


def realize_with_retry(scenario: Scenario, replica: int) -> tuple[Realization, int]:
    """Retry degenerate rootings with fresh substreams; raises
    ResampleSignal when the attempt budget is exhausted."""
    for attempt in range(MAX_ROOT_ATTEMPTS):
        try:
            return realize(scenario, replica, attempt), attempt
        except ResampleSignal:
            continue
    raise ResampleSignal(
        f"replica {replica}: no rootable realization in {MAX_ROOT_ATTEMPTS} attempts"
    )


def run_one_replica(scenario: Scenario, replica: int) -> ReplicaResult:
    """One seeded replica; degenerate rootings are retried then skipped."""
    try:
        real, attempt = realize_with_retry(scenario, replica)
    except ResampleSignal:
        log.warning("replica %d: no rootable realization after %d attempts; skipped",
                    replica, MAX_ROOT_ATTEMPTS)
        return ReplicaResult(replica, VERDICT_SKIPPED, MAX_ROOT_ATTEMPTS)
    verdict, n_events = _run_epidemic(scenario, replica, attempt, real)
    diag = percolation_diagnostics(real.graph_rho)
    return ReplicaResult(
        replica,
        verdict,
        attempt + 1,
        n_devices=len(real.trajectories),
        n_edges=real.graph_rho.n_edges(),
        largest_fraction=diag.largest_fraction,
        n_events=n_events,
    )


def _run_epidemic(scenario, replica, attempt, real) -> tuple[str, int]:
    seed = scenario.master_seed
    if scenario.engine == "dynamic":
        timers = TimerTable(
            scenario.dist_infect, scenario.dist_patch,
            seed_key=(seed, STREAMS["timers_infect"], replica, attempt),
        )
        trace = simulate_dynamic(real.config, real.store, timers,
                                 scenario.resolved_horizon())
        verdict = survival_verdict(trace, scenario.resolved_reach_radius(),
                                   trajectories=real.trajectories)
    else:
        knights = {d.id for d in real.config.devices if d.role == ROLE_KNIGHT}
        static = StaticScenario(
            real.graph_rho, real.config.root_id, knights,
            scenario.dist_infect, scenario.dist_patch, scenario.b,
        )
        trace = simulate_static(
            static, seed_key=(seed, STREAMS["static_timers"], replica, attempt)
        )
        verdict = survival_verdict(trace, scenario.resolved_reach_radius(),
                                   positions=real.positions)
    return verdict, len(trace.events)


# ---------------------------------------------------------------------------
# Replicated runs and sweeps
# ---------------------------------------------------------------------------

@dataclass
class SweepRow:
    axis: str | None
    value: float | None
    n_replicas: int
    counts: dict
    frequency: float
    wilson_lower: float
    wilson_upper: float
    mean_largest_fraction: float
    wall_time: float
    degenerate: bool

    def to_json_dict(self) -> dict:
        return {
            "axis": self.axis,
            "value": self.value,
            "n_replicas": self.n_replicas,
            "counts": dict(sorted(self.counts.items())),
            "frequency": self.frequency,
            "wilson_lower": self.wilson_lower,
            "wilson_upper": self.wilson_upper,
            "mean_largest_fraction": self.mean_largest_fraction,
            "degenerate": self.degenerate,
        }


@dataclass
class SweepResult:
    scenario: Scenario
    rows: list[SweepRow]

    def nonmonotone_interior(self) -> list[int]:
        """Indices of interior rows whose survival frequency is separated
        above both endpoints (lower bound beats both endpoint upper bounds)."""
        if len(self.rows) < 3:
            return []
        first, last = self.rows[0], self.rows[-1]
        flagged = []
        for k, row in enumerate(self.rows[1:-1], start=1):
            if (row.wilson_lower > first.wilson_upper
                    and row.wilson_lower > last.wilson_upper):
                flagged.append(k)
        return flagged

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write("# chasescape v%s scenario=%s\n" % (__version__, self.scenario.hash()))
            writer = csv.writer(fh)
            writer.writerow(
                ["axis", "value", "n_replicas", "n_extinct", "n_local",
                 "n_global", "n_skipped", "frequency", "wilson_lower",
                 "wilson_upper", "mean_largest_fraction", "degenerate"]
            )
            for row in self.rows:
                writer.writerow([
                    row.axis or "",
                    "" if row.value is None else "%.17g" % row.value,
                    row.n_replicas,
                    row.counts.get(VERDICT_EXTINCT, 0),
                    row.counts.get(VERDICT_LOCAL, 0),
                    row.counts.get(VERDICT_GLOBAL, 0),
                    row.counts.get(VERDICT_SKIPPED, 0),
                    "%.17g" % row.frequency,
                    "%.17g" % row.wilson_lower,
                    "%.17g" % row.wilson_upper,
                    "%.17g" % row.mean_largest_fraction,
                    int(row.degenerate),
                ])

    def write_json(self, path) -> None:
        payload = {
            "version": __version__,
            "scenario_hash": self.scenario.hash(),
            "scenario": self.scenario.to_json_dict(),
            "rows": [row.to_json_dict() for row in self.rows],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=1, sort_keys=True)


def _replica_task(args):
    scenario, replica = args
    return run_one_replica(scenario, replica)


def run_replicas(
    scenario: Scenario, n: int, parallelism: int = 1,
    axis: str | None = None, value: float | None = None,
) -> SweepRow:
    """n independent replicas with seeds (master_seed, 0..n-1).

    Aggregation is by replica index, so counts are identical at any
    parallelism level.  The survival frequency is the fraction of
    non-skipped replicas with the global-reach verdict.
    """
    if n < 1:
        raise InvalidParameterError("need at least one replica")
    started = time.perf_counter()
    tasks = [(scenario, k) for k in range(n)]
    if parallelism > 1 and n > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(_replica_task, tasks, chunksize=1))
    else:
        results = [_replica_task(t) for t in tasks]
    results.sort(key=lambda r: r.replica)
    counts = {v: 0 for v in VERDICTS}
    fractions = []
    for res in results:
        counts[res.verdict] += 1
        if res.verdict != VERDICT_SKIPPED:
            fractions.append(res.largest_fraction)
    effective = n - counts[VERDICT_SKIPPED]
    degenerate = effective == 0
    if degenerate:
        log.warning("scenario %s: all %d replicas skipped (degenerate)",
                    scenario.hash(), n)
        frequency, lower, upper = 0.0, 0.0, 1.0
    else:
        successes = counts[VERDICT_GLOBAL]
        frequency = successes / effective
        lower, upper = wilson_interval(successes, effective)
    return SweepRow(
        axis, value, n, counts, frequency, lower, upper,
        float(np.mean(fractions)) if fractions else 0.0,
        time.perf_counter() - started,
        degenerate,
    )


def sweep(
    scenario: Scenario, axis: str, values, n: int, parallelism: int = 1
) -> SweepResult:
    """One row per axis value, same replica seeds in every row."""
    rows = []
    for value in values:
        modified = scenario.with_value(axis, value)
        rows.append(run_replicas(modified, n, parallelism, axis, float(value)))
    return SweepResult(scenario, rows)


# ---------------------------------------------------------------------------
# Percolation diagnostics
# ---------------------------------------------------------------------------

@dataclass
class Diagnostics:
    component_sizes: list[int]
    largest_fraction: float
    boundary_flag: bool
    degree_histogram: dict[int, int]


def percolation_diagnostics(
    graph: ConnectivityGraph,
    root: int | None = None,
    window: Window | None = None,
    band: float | None = None,
) -> Diagnostics:
    """Component structure of a connectivity graph.

    The boundary flag reports whether the root's component contains a
    vertex within ``band`` of the window boundary (the finite-window
    stand-in for reaching the unbounded component).
    """
    ids = sorted(graph.vertices)
    index = {v: k for k, v in enumerate(ids)}
    parent = list(range(len(ids)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for (i, j) in graph.edges:
        ri, rj = find(index[i]), find(index[j])
        if ri != rj:
            parent[rj] = ri
    sizes: dict[int, int] = {}
    for k in range(len(ids)):
        sizes[find(k)] = sizes.get(find(k), 0) + 1
    component_sizes = sorted(sizes.values(), reverse=True)
    largest = component_sizes[0] / len(ids) if ids else 0.0

    boundary = False
    if root is not None and window is not None and graph.positions:
        width = band if band is not None else graph.r
        root_comp = find(index[root])
        for v in ids:
            if find(index[v]) != root_comp:
                continue
            x, y = graph.positions[v]
            if (x - window.xmin <= width or window.xmax - x <= width
                    or y - window.ymin <= width or window.ymax - y <= width):
                boundary = True
                break

    histogram: dict[int, int] = {}
    for v in ids:
        d = graph.degree(v)
        histogram[d] = histogram.get(d, 0) + 1
    return Diagnostics(component_sizes, largest, boundary, histogram)
