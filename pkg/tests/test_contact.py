import math

import numpy as np
import pytest

from chasescape import (
    ContactSet,
    ContactStore,
    MissingContactError,
    StreetPoint,
    Window,
    build_connectivity_graph,
    build_graph,
    build_trajectory,
    contact_intervals,
    generate_pvt,
    geo_degree_bound,
    has_edge,
    sample_cox,
)
from chasescape.contact import first_edge_witness
from conftest import graph_from_segments
from oracles import dense_contact_intervals, match_intervals

SEED = 90210


def _two_walkers(graph, horizon=20.0):
    a = build_trajectory(graph, StreetPoint(0, 0.0), StreetPoint(0, 10.0),
                        1.0, horizon, device_id=0)
    b = build_trajectory(graph, StreetPoint(0, 10.0), StreetPoint(0, 0.0),
                        1.0, horizon, device_id=1)
    return a, b


def test_identical_trajectories_touch_everywhere(straight_graph):
    a = build_trajectory(straight_graph, StreetPoint(0, 2.0),
                        StreetPoint(0, 8.0), 1.0, 20.0, device_id=0)
    b = build_trajectory(straight_graph, StreetPoint(0, 2.0),
                        StreetPoint(0, 8.0), 1.0, 20.0, device_id=1)
    cs = contact_intervals(a, b, 0.5)
    assert cs.intervals == [(0.0, 20.0)]


def test_opposing_walkers_analytic_intervals(straight_graph):
    # both at speed 1 from opposite ends of a length-10 street with r = 2:
    # |10 - 2t| < 2 and |30 - 2t| < 2 give (4, 6) and (14, 16)
    a, b = _two_walkers(straight_graph)
    cs = contact_intervals(a, b, 2.0, 20.0)
    assert len(cs.intervals) == 2
    (s1, e1), (s2, e2) = cs.intervals
    assert abs(s1 - 4.0) < 1e-9 and abs(e1 - 6.0) < 1e-9
    assert abs(s2 - 14.0) < 1e-9 and abs(e2 - 16.0) < 1e-9


def test_devices_on_disjoint_streets_never_meet():
    graph = graph_from_segments([
        ((0.0, 0.0), (10.0, 0.0)),
        ((0.0, 0.3), (10.0, 0.3)),
    ])
    a = build_trajectory(graph, StreetPoint(0, 0.0), StreetPoint(0, 10.0),
                        1.0, 20.0, device_id=0)
    b = build_trajectory(graph, StreetPoint(1, 0.0), StreetPoint(1, 10.0),
                        1.0, 20.0, device_id=1)
    # distance 0.3 < r at all times, but never the same street
    assert contact_intervals(a, b, 1.0).is_empty()


def test_contact_is_symmetric(straight_graph):
    a, b = _two_walkers(straight_graph)
    assert contact_intervals(a, b, 2.0).intervals == \
        contact_intervals(b, a, 2.0).intervals


def test_contact_monotone_in_r(straight_graph):
    a, b = _two_walkers(straight_graph)
    small = contact_intervals(a, b, 1.0).intervals
    large = contact_intervals(a, b, 2.5).intervals
    for s, e in small:
        assert any(ls <= s and e <= le for ls, le in large)


def test_dense_oracle_matches_intervals(h_graph, rng):
    streets = h_graph.streets
    horizon = 8.0
    checked = 0
    for k in range(12):
        sa, sb = rng.choice(len(streets), size=2)
        ta = build_trajectory(
            h_graph,
            StreetPoint(int(sa), float(rng.uniform(0, streets[sa].length))),
            StreetPoint(int(sb), float(rng.uniform(0, streets[sb].length))),
            float(rng.uniform(0.5, 2.0)), horizon, rng, device_id=0,
        )
        sc, sd = rng.choice(len(streets), size=2)
        tb = build_trajectory(
            h_graph,
            StreetPoint(int(sc), float(rng.uniform(0, streets[sc].length))),
            StreetPoint(int(sd), float(rng.uniform(0, streets[sd].length))),
            float(rng.uniform(0.5, 2.0)), horizon, rng, device_id=1,
        )
        exact = contact_intervals(ta, tb, 0.8, horizon).intervals
        sampled = dense_contact_intervals(ta, tb, 0.8, horizon, step=1e-4)
        match_intervals(exact, sampled, tol=2e-4)
        checked += 1
    assert checked == 12


# ---------------------------------------------------------------------------
# Edges
# ---------------------------------------------------------------------------

def test_has_edge_strict_threshold():
    cs = ContactSet((0, 1), [(4.0, 6.0)])
    assert has_edge(cs, 0.0)
    assert not has_edge(cs, 2.0)   # closed window of length 2 cannot fit
    assert has_edge(cs, 1.9)
    assert not has_edge(ContactSet((0, 1), []), 0.0)
    assert first_edge_witness(cs, 1.9) == (4.0, 6.0)


def test_edge_set_antitone_in_rho(straight_graph):
    a, b = _two_walkers(straight_graph)
    cs = contact_intervals(a, b, 2.0)
    rhos = [0.0, 0.5, 1.0, 1.5, 2.0]
    flags = [has_edge(cs, rho) for rho in rhos]
    assert flags == sorted(flags, reverse=True)


def test_single_device_graph_is_edgeless(straight_graph):
    traj = build_trajectory(straight_graph, StreetPoint(0, 0.0),
                           StreetPoint(0, 10.0), 1.0, 20.0, device_id=0)
    store = ContactStore.from_trajectories({0: traj}, 2.0, 20.0)
    graph = build_connectivity_graph(store, 0.5)
    assert graph.n_vertices() == 1
    assert graph.n_edges() == 0


def test_stationary_chain_becomes_path_graph():
    graph = graph_from_segments([((0.0, 0.0), (10.0, 0.0))], side=30.0)
    r = 2.0
    trajs = {
        k: build_trajectory(graph, StreetPoint(0, 1.0 + k * r / 2),
                           StreetPoint(0, 1.0 + k * r / 2), 1.0, 10.0,
                           device_id=k)
        for k in range(5)
    }
    store = ContactStore.from_trajectories(trajs, r, 10.0)
    g = build_connectivity_graph(store, 0.5)
    expected = {(k, k + 1) for k in range(4)}
    assert set(g.edges) == expected


def test_pruned_graph_matches_unpruned_bruteforce(rng):
    system = generate_pvt(0.3, Window.centered(10.0), rng)
    graph = build_graph(system)
    pts = sample_cox(graph, 0.35, rng)[:20]
    if len(pts) < 8:
        pytest.skip("sparse draw")
    from chasescape import UniformBallKernel

    kernel = UniformBallKernel(1.5)
    trajs = {}
    for k, p in enumerate(pts):
        target = kernel.sample(graph, p, rng)
        trajs[k] = build_trajectory(graph, p, target, 1.0, 10.0, rng, k)
    pruned = ContactStore.from_trajectories(trajs, 0.7, 10.0)
    brute = ContactStore.from_trajectories(trajs, 0.7, 10.0, prune=False)
    g1 = build_connectivity_graph(pruned, 0.3)
    g2 = build_connectivity_graph(brute, 0.3)
    assert set(g1.edges) == set(g2.edges)


def test_store_distinguishes_empty_from_missing(straight_graph):
    a, b = _two_walkers(straight_graph)
    store = ContactStore.from_trajectories({0: a, 1: b}, 2.0, 20.0)
    assert store.get(0, 1).intervals == store.get(1, 0).intervals
    with pytest.raises(MissingContactError):
        store.get(0, 5)
    with pytest.raises(MissingContactError):
        store.partners(9)


def test_contact_csv_dump(tmp_path, straight_graph):
    a, b = _two_walkers(straight_graph)
    store = ContactStore.from_trajectories({0: a, 1: b}, 2.0, 20.0)
    out = tmp_path / "contacts.csv"
    store.dump_csv(out)
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "i,j,t_start,t_end"
    assert len(lines) == 3  # two intervals


# ---------------------------------------------------------------------------
# Geostatistical degree bound
# ---------------------------------------------------------------------------

def test_lone_device_has_degree_zero(straight_graph):
    deg = geo_degree_bound(straight_graph, {0: StreetPoint(0, 5.0)}, 2.0, 0.5)
    assert deg == {0: 0}


def test_straight_street_reach_is_exact():
    # on one long straight street the farthest waypoint is exactly L away,
    # so the disc radius is L + r/2 and two devices farther apart than
    # 2(L + r/2) cannot be neighbors
    graph = graph_from_segments([((0.0, 0.0), (40.0, 0.0))], side=100.0)
    L, r = 2.0, 1.0
    pts = {0: StreetPoint(0, 10.0), 1: StreetPoint(0, 10.0 + 2 * (L + r / 2) + 0.01)}
    assert geo_degree_bound(graph, pts, L, r) == {0: 0, 1: 0}
    pts_close = {0: StreetPoint(0, 10.0), 1: StreetPoint(0, 10.0 + 2 * (L + r / 2) - 0.01)}
    assert geo_degree_bound(graph, pts_close, L, r) == {0: 1, 1: 1}


def test_connectivity_degree_bounded_by_geo_degree(rng):
    system = generate_pvt(0.3, Window.centered(10.0), rng)
    graph = build_graph(system)
    pts = sample_cox(graph, 0.3, rng)[:18]
    if len(pts) < 6:
        pytest.skip("sparse draw")
    from chasescape import UniformBallKernel

    L, r = 1.5, 0.6
    kernel = UniformBallKernel(L)
    trajs = {}
    points = {}
    for k, p in enumerate(pts):
        target = kernel.sample(graph, p, rng)
        trajs[k] = build_trajectory(graph, p, target, 1.0, 12.0, rng, k)
        points[k] = p
    store = ContactStore.from_trajectories(trajs, r, 12.0)
    g = build_connectivity_graph(store, 0.2)
    geo = geo_degree_bound(graph, points, L, r)
    for k in points:
        assert g.degree(k) <= geo[k]
