import math

import numpy as np
import pytest

from chasescape import (
    ConnectivityGraph,
    InvalidParameterError,
    TimeDistribution,
    good_device_probability,
    reach_bound,
    scale_distribution,
    simulate_static,
    thin_graph,
)
from chasescape.epidemic import INFECTED
from chasescape.staticgraph import (
    StaticScenario,
    default_t_max,
    good_device_closed_form,
    hop_distances,
    sample_good_device_draws,
)
from oracles import bfs_component

SEED = 777


def path_graph(n, extra_edges=(), positions=None):
    edges = [(k, k + 1) for k in range(n - 1)] + list(extra_edges)
    return ConnectivityGraph.from_edge_list(edges, vertices=range(n),
                                            positions=positions)


def dirac(x):
    return TimeDistribution.dirac(x)


# ---------------------------------------------------------------------------
# Distribution scaling
# ---------------------------------------------------------------------------

def test_scale_identity_and_dirac():
    d = TimeDistribution.uniform(1.0, 2.0)
    assert scale_distribution(d, 1.0) == d
    assert scale_distribution(dirac(3.0), 2.0) == dirac(1.5)
    with pytest.raises(InvalidParameterError):
        scale_distribution(d, 0.0)


def test_scale_uniform_moments(rng):
    scaled = scale_distribution(TimeDistribution.uniform(1.0, 2.0), 2.0)
    draws = scaled.sample(rng, size=10_000)
    assert abs(draws.mean() - 0.75) <= 0.01
    assert scaled.min_support == 0.5


def test_scale_shifted_exponential():
    d = TimeDistribution.shifted_exponential(1.0, 2.0)
    s = scale_distribution(d, 4.0)
    assert s.min_support == 0.25
    assert math.isclose(s.mean(), d.mean() / 4.0)


# ---------------------------------------------------------------------------
# Static engine
# ---------------------------------------------------------------------------

def test_path_infection_times_step_by_two():
    g = path_graph(5)
    scenario = StaticScenario(g, 0, set(), dirac(2.0), dirac(10.0))
    trace = simulate_static(scenario, seed_key=(SEED,))
    infected = [(e.device, e.t) for e in trace.events if e.transition == INFECTED]
    assert infected == [(1, 2.0), (2, 4.0), (3, 6.0), (4, 8.0)]
    assert trace.meta["quiescent"]


def test_slower_patch_cannot_stop_traversal():
    # one knight attached to every path vertex; infection (1) beats patch (2)
    n = 6
    edges = [(k, k + 1) for k in range(n - 1)]
    knights = set()
    for k in range(n):
        knight = n + k
        edges.append((k, knight))
        knights.add(knight)
    g = ConnectivityGraph.from_edge_list(edges)
    scenario = StaticScenario(g, 0, knights, dirac(1.0), dirac(2.0))
    trace = simulate_static(scenario, seed_key=(SEED,), t_max=200.0)
    infected_path = {e.device for e in trace.events
                     if e.transition == INFECTED and e.device < n}
    assert infected_path == set(range(1, n))
    # every infected device is eventually patched, but only after passing on
    assert trace.extinction_time() is not None


def test_faster_patch_with_adjacent_knight_contains_infection():
    # knight at hop distance 1 from the root on a half line: bound is
    # N + D = 6 for times (3, 2); the patch in fact stops everything early
    n = 12
    edges = [(k, k + 1) for k in range(n - 1)] + [(0, 100)]
    g = ConnectivityGraph.from_edge_list(edges)
    scenario = StaticScenario(g, 0, {100}, dirac(3.0), dirac(2.0))
    trace = simulate_static(scenario, seed_key=(SEED,), t_max=500.0)
    assert trace.extinction_time() is not None
    hops = hop_distances(g, 0)
    max_hop = max(hops[d] for d in trace.ever_infected())
    assert max_hop <= reach_bound(1, 3.0, 2.0) == 6


def test_reach_bound_examples_and_errors():
    assert reach_bound(1, 3.0, 2.0) == 6   # N = 5: 15 > 14 while 12 <= 12
    assert reach_bound(1, 2.0, 1.0) == 4   # N = 3: 6 > 5 while 4 <= 4
    assert reach_bound(2, 3.0, 2.0) == 11
    with pytest.raises(InvalidParameterError):
        reach_bound(1, 2.0, 2.0)
    with pytest.raises(InvalidParameterError):
        reach_bound(0, 3.0, 2.0)


@pytest.mark.parametrize("trial", range(25))
def test_reach_bound_holds_on_random_trees(trial):
    # random tree + one knight at hop distance D: the ever-infected set
    # stays within N + D hops for strictly faster dirac patching
    local = np.random.default_rng((SEED, trial))
    n = int(local.integers(10, 40))
    edges = [(int(local.integers(0, k)), k) for k in range(1, n)]
    g = ConnectivityGraph.from_edge_list(edges, vertices=range(n))
    hops = hop_distances(g, 0)
    t_infect, t_patch = 3.0, 2.0
    knight = int(local.integers(1, n))
    D = hops[knight]
    scenario = StaticScenario(g, 0, {knight}, dirac(t_infect), dirac(t_patch))
    trace = simulate_static(scenario, seed_key=(SEED, trial),
                            t_max=20.0 * n)
    max_hop = max(hops[d] for d in trace.ever_infected())
    assert max_hop <= reach_bound(D, t_infect, t_patch)
    assert trace.extinction_time() is not None


def test_knight_free_static_run_covers_root_component():
    local = np.random.default_rng(SEED)
    n = 24
    edges = [(i, j) for i in range(n) for j in range(i + 1, n)
             if local.random() < 0.08]
    g = ConnectivityGraph.from_edge_list(edges, vertices=range(n))
    scenario = StaticScenario(g, 0, set(), TimeDistribution.uniform(0.5, 1.5),
                              TimeDistribution.uniform(0.5, 1.5))
    trace = simulate_static(scenario, seed_key=(SEED,), t_max=400.0)
    assert trace.ever_infected() == bfs_component(g, 0)


def test_default_t_max_scales_with_diameter():
    g = path_graph(9)
    scenario = StaticScenario(g, 0, set(), dirac(2.0), dirac(1.0))
    assert default_t_max(scenario) == (2 * 8 + 1) * 2.0


# ---------------------------------------------------------------------------
# Thinning
# ---------------------------------------------------------------------------

def test_thin_identity_when_cap_exceeds_degrees(rng):
    g = path_graph(6)
    thinned = thin_graph(g, 5, 1.0, rng)
    assert set(thinned.vertices) == set(g.vertices)
    assert set(thinned.edges) == set(g.edges)


def test_thin_p_zero_empties_vertices(rng):
    g = path_graph(6)
    thinned = thin_graph(g, 5, 0.0, rng)
    assert thinned.vertices == []
    assert thinned.edges == {}


def test_thin_removes_high_degree_star_center(rng):
    m = 4
    edges = [(0, k) for k in range(1, m + 2)]  # center degree m+1
    g = ConnectivityGraph.from_edge_list(edges)
    thinned = thin_graph(g, m, 1.0, rng)
    assert 0 not in thinned.vertices
    assert thinned.edges == {}


def test_thin_degree_cap_and_keep_fraction():
    rng = np.random.default_rng(SEED)
    n = 400
    edges = [(i, j) for i in range(n) for j in range(i + 1, n)
             if rng.random() < 0.01]
    g = ConnectivityGraph.from_edge_list(edges, vertices=range(n))
    M, p = 5, 0.6
    thinned = thin_graph(g, M, p, np.random.default_rng(SEED + 1))
    for v in thinned.vertices:
        assert g.degree(v) <= M
    eligible = sum(1 for v in g.vertices if g.degree(v) <= M)
    frac = len(thinned.vertices) / eligible
    assert abs(frac - p) < 3.0 * math.sqrt(p * (1 - p) / eligible)


# ---------------------------------------------------------------------------
# Good-device probability
# ---------------------------------------------------------------------------

def test_good_device_exponential_closed_form():
    est = good_device_probability(
        1, TimeDistribution.exponential(1.0), TimeDistribution.exponential(1.0),
        1.0, 200_000, np.random.default_rng(SEED),
    )
    assert abs(est.probability - 0.5) <= 0.01
    assert est.lower <= 0.5 <= est.upper
    assert good_device_closed_form(
        1, TimeDistribution.exponential(1.0), TimeDistribution.exponential(1.0), 1.0
    ) == 0.5
    # b/(b+1) for other b
    assert math.isclose(
        good_device_closed_form(
            1, TimeDistribution.exponential(1.0), TimeDistribution.exponential(1.0), 3.0
        ),
        0.75,
    )


def test_good_device_closed_form_matches_mc_for_m3():
    dist = TimeDistribution.exponential(1.0)
    exact = good_device_closed_form(3, dist, dist, 2.0)
    est = good_device_probability(3, dist, dist, 2.0, 300_000,
                                  np.random.default_rng(SEED))
    assert abs(est.probability - exact) <= 0.005


def test_good_device_dirac_is_deterministic():
    est = good_device_probability(
        4, dirac(3.0), dirac(2.0), 2.0, 100, np.random.default_rng(SEED)
    )
    assert est.probability == 1.0  # 3/2 < 2 always
    est2 = good_device_probability(
        4, dirac(3.0), dirac(2.0), 1.0, 100, np.random.default_rng(SEED)
    )
    assert est2.probability == 0.0


def test_good_device_monotone_in_b_under_shared_draws():
    draws = sample_good_device_draws(
        3, TimeDistribution.exponential(1.0), TimeDistribution.exponential(1.0),
        20_000, np.random.default_rng(SEED),
    )
    probs = [
        good_device_probability(
            3, TimeDistribution.exponential(1.0),
            TimeDistribution.exponential(1.0), b, 20_000, draws=draws,
        ).probability
        for b in (0.5, 1.0, 2.0, 4.0)
    ]
    assert probs == sorted(probs)
