import math

import numpy as np
import pytest

from chasescape import (
    NoPathError,
    StreetPoint,
    Window,
    build_graph,
    generate_pvt,
    shortest_path,
)
from chasescape.routing import crossing_distances

from oracles import brute_shortest

SEED = 4242


def _point_on(graph, x, y, tol=1e-9):
    """StreetPoint of a plane point known to lie on some street."""
    for s in graph.streets:
        (x1, y1), (x2, y2) = s.geometry
        dx, dy = x2 - x1, y2 - y1
        L2 = dx * dx + dy * dy
        t = ((x - x1) * dx + (y - y1) * dy) / L2
        if -1e-12 <= t <= 1.0 + 1e-12:
            px, py = x1 + t * dx, y1 + t * dy
            if math.hypot(px - x, py - y) <= tol:
                return StreetPoint(s.index, min(max(t, 0.0), 1.0) * s.length)
    raise AssertionError(f"({x}, {y}) is not on a street")


def test_identical_points_have_zero_route(straight_graph):
    p = StreetPoint(0, 4.0)
    route = shortest_path(straight_graph, p, p)
    assert route.length == 0.0
    assert route.n_paths == 1
    assert route.sample().legs == []


def test_h_fixture_route_goes_through_rung(h_graph):
    x = _point_on(h_graph, 0.0, 0.0)
    y = _point_on(h_graph, 2.0, 0.0)
    route = shortest_path(h_graph, x, y)
    assert math.isclose(route.length, 6.0, rel_tol=1e-12)
    expected, ties = brute_shortest(h_graph, x, y)
    assert math.isclose(route.length, expected, rel_tol=1e-12)
    assert route.n_paths == ties == 1
    path = route.sample()
    assert math.isclose(sum(leg.length for leg in path.legs), 6.0)


def test_square_opposite_corners_tie(square_graph):
    x = _point_on(square_graph, 0.0, 0.0)
    y = _point_on(square_graph, 1.0, 1.0)
    route = shortest_path(square_graph, x, y)
    assert math.isclose(route.length, 2.0, rel_tol=1e-12)
    assert route.n_paths == 2
    paths = route.paths()
    assert len(paths) == 2
    firsts = sorted(p.legs[0].street_id for p in paths)
    assert firsts[0] != firsts[1]


def test_tie_sampling_is_roughly_uniform(square_graph):
    x = _point_on(square_graph, 0.0, 0.0)
    y = _point_on(square_graph, 1.0, 1.0)
    route = shortest_path(square_graph, x, y)
    rng = np.random.default_rng(SEED)
    counts = {}
    for _ in range(400):
        first = route.sample(rng).legs[0].street_id
        counts[first] = counts.get(first, 0) + 1
    assert len(counts) == 2
    assert min(counts.values()) > 140  # ~200 each


def test_disconnected_components_raise(rng):
    from chasescape import SegmentSystem

    graph = build_graph(SegmentSystem(
        [((0.0, 0.0), (1.0, 0.0)), ((5.0, 5.0), (6.0, 5.0))],
        Window.centered(20.0),
    ))
    with pytest.raises(NoPathError):
        shortest_path(graph, StreetPoint(0, 0.5), StreetPoint(1, 0.5))


def test_midstreet_endpoints_use_direct_hop(straight_graph):
    route = shortest_path(straight_graph, StreetPoint(0, 2.0), StreetPoint(0, 7.5))
    assert math.isclose(route.length, 5.5)
    legs = route.sample().legs
    assert len(legs) == 1 and legs[0].street_id == 0


def test_random_triples_obey_triangle_inequality(rng):
    system = generate_pvt(0.3, Window.centered(12.0), rng)
    graph = build_graph(system)
    labels = graph.component_labels()
    # restrict to the largest component so routes exist
    values, counts = np.unique(labels, return_counts=True)
    main = values[np.argmax(counts)]
    streets = [s for s in graph.streets if labels[s.c1] == main]
    assert len(streets) > 10
    for _ in range(25):
        pts = [
            StreetPoint(s.index, float(rng.uniform(0.0, s.length)))
            for s in rng.choice(streets, size=3)
        ]
        d_xy = shortest_path(graph, pts[0], pts[1]).length
        d_yz = shortest_path(graph, pts[1], pts[2]).length
        d_xz = shortest_path(graph, pts[0], pts[2]).length
        assert d_xz <= d_xy + d_yz + 1e-9
        # arclength dominates Euclidean distance
        ax, ay = graph.point_at(pts[0])
        bx, by = graph.point_at(pts[2])
        assert d_xz >= math.hypot(ax - bx, ay - by) - 1e-9


def test_crossing_distances_match_route_lengths(h_graph):
    x = _point_on(h_graph, 0.0, 1.0)
    dist = crossing_distances(h_graph, x)
    for c in range(h_graph.n_crossings()):
        cx, cy = h_graph.crossings[c]
        target = _point_on(h_graph, cx, cy)
        expected = shortest_path(h_graph, x, target).length
        assert math.isclose(dist[c], expected, rel_tol=1e-12)
