"""Chase-escape as an independent process on the static connectivity graph.

Every edge behaves as a permanent contact window, so runs avoid the cost of
simulating collective movement; transmission and patch timers are drawn
per ordered pair exactly as in the moving model.  The module also houses
the deterministic-time reach bound, degree-capped Bernoulli thinning of the
graph, and the good-device probability (a device passes the infection to
all neighbors before any neighbor patches it).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .contact import ConnectivityGraph, ContactStore
from .distributions import TimeDistribution
from .epidemic import (
    ROLE_S,
    ROLE_W,
    EpidemicTrace,
    TimerTable,
    simulate,
)
from .errors import InvalidParameterError
from .streets import wilson_interval


@dataclass
class StaticScenario:
    """A rooted epidemic problem on a fixed connectivity graph."""

    graph: ConnectivityGraph
    root: int
    knights: set[int]
    dist_infect: TimeDistribution
    dist_patch: TimeDistribution
    b: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.root not in self.graph.vertices:
            raise InvalidParameterError("root is not a graph vertex")
        if self.root in self.knights:
            raise InvalidParameterError("root cannot be a knight")
        if self.b <= 0.0:
            raise InvalidParameterError("time scale b must be positive")
        unknown = self.knights - set(self.graph.vertices)
        if unknown:
            raise InvalidParameterError(f"knights outside graph: {sorted(unknown)}")

    def roles0(self) -> dict[int, str]:
        return {
            v: (ROLE_W if v in self.knights else ROLE_S)
            for v in self.graph.vertices
        }


def hop_distances(graph: ConnectivityGraph, source: int) -> dict[int, int]:
    """BFS hop distance from ``source`` to each reachable vertex."""
    dist = {source: 0}
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for w in graph.neighbors(v):
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def default_t_max(scenario: StaticScenario) -> float:
    """Horizon long enough for the process to settle in common cases:
    (diameter bound + 1) * max(mean transmission times, 1)."""
    dist = hop_distances(scenario.graph, scenario.root)
    ecc = max(dist.values(), default=0)
    diameter_bound = 2 * ecc
    scale = max(
        scenario.dist_infect.scaled(scenario.b).mean(),
        scenario.dist_patch.mean(),
        1.0,
    )
    return (diameter_bound + 1) * scale


def simulate_static(
    scenario: StaticScenario,
    seed_key=(0,),
    t_max: float | None = None,
) -> EpidemicTrace:
    """Run the chase-escape engine with every edge permanently in contact.

    The trace metadata records whether the final state is quiescent (no
    infected device still has a susceptible or knight neighbor), which
    verifies that ``t_max`` truncated nothing.
    """
    if t_max is None:
        t_max = default_t_max(scenario)
    store = ContactStore.permanent(
        scenario.graph.vertices, t_max, scenario.graph.edges
    )
    timers = TimerTable(
        scenario.dist_infect.scaled(scenario.b), scenario.dist_patch, seed_key
    )
    trace = simulate(scenario.roles0(), scenario.root, store, timers, t_max)
    trace.meta["engine"] = "static"
    trace.meta["t_max"] = t_max
    trace.meta["quiescent"] = _is_quiescent(scenario.graph, trace)
    return trace


def _is_quiescent(graph: ConnectivityGraph, trace: EpidemicTrace) -> bool:
    roles = trace.final_roles()
    for v, role in roles.items():
        if role != "infected":
            continue
        for w in graph.neighbors(v):
            if roles[w] != "infected":
                return False
    return True


# ---------------------------------------------------------------------------
# Deterministic-time reach bound
# ---------------------------------------------------------------------------

def reach_bound(D: int, t_infect: float, t_patch: float) -> int:
    """Maximal hop distance the infection can reach when patching is
    strictly faster, with the nearest knight at hop distance ``D``.

    Returns N + D for the least N with N * t_infect > (N + 2D) * t_patch.
    Undefined when the infection is at least as fast as the patch.
    """
    if D < 1:
        raise InvalidParameterError(f"knight distance must be >= 1, got {D}")
    if not (t_infect > t_patch > 0.0):
        raise InvalidParameterError(
            "reach bound requires infection strictly slower than patch "
            f"(got t_infect={t_infect}, t_patch={t_patch})"
        )
    n = math.floor(2.0 * D * t_patch / (t_infect - t_patch)) + 1
    return n + D


# ---------------------------------------------------------------------------
# Degree-capped Bernoulli thinning
# ---------------------------------------------------------------------------

def thin_graph(
    graph: ConnectivityGraph, max_degree: int, p: float, rng
) -> ConnectivityGraph:
    """Keep vertices with degree <= max_degree in the parent graph, then
    each survivor independently with probability ``p``; edges induced.

    Degrees count all parent-graph neighbors (knights included when the
    parent graph carries them).
    """
    if max_degree < 0:
        raise InvalidParameterError("max degree must be >= 0")
    if not (0.0 <= p <= 1.0):
        raise InvalidParameterError(f"keep probability must be in [0, 1], got {p}")
    kept = []
    for v in sorted(graph.vertices):
        if graph.degree(v) > max_degree:
            continue
        if p >= 1.0:
            kept.append(v)
        elif p > 0.0 and rng.random() < p:
            kept.append(v)
    return graph.induced(kept)


# ---------------------------------------------------------------------------
# Good-device probability
# ---------------------------------------------------------------------------

@dataclass
class GoodDeviceEstimate:
    probability: float
    lower: float
    upper: float
    n_samples: int
    successes: int


def sample_good_device_draws(
    max_degree: int, dist_infect: TimeDistribution, dist_patch: TimeDistribution,
    n_samples: int, rng
):
    """Raw (infection, patch) draw matrices for common-random-number use."""
    shape = (n_samples, max_degree)
    return dist_infect.sample(rng, shape), dist_patch.sample(rng, shape)


def good_device_probability(
    max_degree: int,
    dist_infect: TimeDistribution,
    dist_patch: TimeDistribution,
    b: float,
    n_samples: int,
    rng=None,
    draws=None,
) -> GoodDeviceEstimate:
    """Monte Carlo estimate of
    P(min of M patch times > (1/b) * max of M infection times)
    with a Wilson 95% interval.

    The infection times are sped up by the factor ``b``; under shared draws
    the indicator is monotone non-decreasing in ``b``.
    """
    if max_degree < 1:
        raise InvalidParameterError("max degree must be >= 1")
    if n_samples < 1:
        raise InvalidParameterError("need at least one sample")
    if b <= 0.0:
        raise InvalidParameterError("time scale b must be positive")
    if draws is None:
        if rng is None:
            rng = np.random.default_rng()
        draws = sample_good_device_draws(
            max_degree, dist_infect, dist_patch, n_samples, rng
        )
    infect, patch = draws
    good = patch.min(axis=1) > infect.max(axis=1) / b
    successes = int(good.sum())
    lower, upper = wilson_interval(successes, n_samples)
    return GoodDeviceEstimate(successes / n_samples, lower, upper,
                              n_samples, successes)


def good_device_closed_form(
    max_degree: int,
    dist_infect: TimeDistribution,
    dist_patch: TimeDistribution,
    b: float,
) -> float | None:
    """Exact value for the dirac and pure-exponential cases; None otherwise."""
    if dist_infect.is_dirac and dist_patch.is_dirac:
        return 1.0 if dist_patch.a > dist_infect.a / b else 0.0
    exp_i = dist_infect.kind == "shifted_exponential" and dist_infect.a == 0.0
    exp_w = dist_patch.kind == "shifted_exponential" and dist_patch.a == 0.0
    if exp_i and exp_w:
        ri, rw = dist_infect.b, dist_patch.b
        m = max_degree
        if m == 1:
            return b * ri / (b * ri + rw)
        # P(min W > max I / b) = E[exp(-m * rw * maxI / b)]
        def integrand(x):
            return (
                m * ri * (1.0 - math.exp(-ri * x)) ** (m - 1)
                * math.exp(-ri * x) * math.exp(-m * rw * x / b)
            )

        value, _ = integrate.quad(integrand, 0.0, np.inf)
        return float(value)
    return None
