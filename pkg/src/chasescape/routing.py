"""Shortest routes between on-street points, with uniform tie sampling.

Route endpoints are street points, inserted as temporary nodes that split
their street.  When several routes tie for the minimal arclength (within a
1e-9 relative tolerance), the tight-edge DAG is kept so ties can be counted
exactly, enumerated, or sampled uniformly at random.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, NoPathError
from .geometry import MERGE_TOL
from .streets import StreetGraph, StreetPoint

REL_TIE_TOL = 1e-9


@dataclass
class Leg:
    """One traversed piece of a route: a street swept from ``o_from`` to
    ``o_to`` in arclength coordinates."""

    street_id: int
    o_from: float
    o_to: float

    @property
    def length(self) -> float:
        return abs(self.o_to - self.o_from)


@dataclass
class Path:
    legs: list[Leg]
    length: float

    def plane_points(self, graph: StreetGraph) -> np.ndarray:
        pts = []
        for i, leg in enumerate(self.legs):
            a = graph.point_at(StreetPoint(leg.street_id, leg.o_from))
            if i == 0:
                pts.append(a)
            b = graph.point_at(StreetPoint(leg.street_id, leg.o_to))
            pts.append(b)
        if not pts:
            return np.empty((0, 2))
        return np.array(pts, dtype=float)


def _routing_adjacency(graph: StreetGraph):
    """Cached crossing adjacency: crossing -> [(neighbor, street_id, length)]."""
    cached = graph.meta.get("_routing_adj")
    if cached is not None:
        return cached
    adj = [[] for _ in range(graph.n_crossings())]
    for s in graph.streets:
        adj[s.c1].append((s.c2, s.index, s.length))
        adj[s.c2].append((s.c1, s.index, s.length))
    graph.meta["_routing_adj"] = adj
    return adj


class _Endpoint:
    """A route endpoint, possibly aliased to a crossing."""

    def __init__(self, graph: StreetGraph, point: StreetPoint, node_id: int):
        street = graph.streets[point.street_id]
        if not (0.0 <= point.offset <= street.length + MERGE_TOL):
            raise InvalidParameterError(
                f"offset {point.offset} outside street {point.street_id}"
            )
        self.point = point
        self.street = street
        if point.offset == 0.0:
            self.node = street.c1
            self.at_crossing = True
        elif point.offset >= street.length:
            self.node = street.c2
            self.at_crossing = True
        else:
            self.node = node_id
            self.at_crossing = False

    def edges(self):
        """Edges attaching a mid-street endpoint to its two crossings."""
        if self.at_crossing:
            return []
        o = self.point.offset
        s = self.street
        return [
            (self.street.c1, s.index, o),
            (self.street.c2, s.index, s.length - o),
        ]

    def offset_at(self, node: int) -> float:
        """Arclength coordinate of ``node`` on this endpoint's street."""
        if node == self.node and not self.at_crossing:
            return self.point.offset
        return self.street.offset_of(node)


class RouteResult:
    """Distance plus the tight-edge DAG of all minimal routes."""

    def __init__(self, graph, source, target, dist, preds, node_dist, order):
        self.graph = graph
        self.source = source
        self.target = target
        self.length = dist
        self._preds = preds  # node -> [(prev_node, street_id, weight)]
        self._node_dist = node_dist
        self._order = order  # nodes sorted by distance
        self._counts = None

    # -- tie accounting -------------------------------------------------

    def _path_counts(self):
        if self._counts is None:
            counts = {self._order[0]: 1}
            for node in self._order[1:]:
                counts[node] = sum(
                    counts.get(prev, 0) for prev, _, _ in self._preds.get(node, ())
                )
            self._counts = counts
        return self._counts

    @property
    def n_paths(self) -> int:
        return self._path_counts().get(self._target_node, 0)

    @property
    def is_tied(self) -> bool:
        return self.n_paths > 1

    # -- materialization -------------------------------------------------

    def sample(self, rng=None) -> Path:
        """One minimal route, uniform over all ties."""
        counts = self._path_counts()
        node = self._target_node
        edges_rev = []
        while node != self._source_node:
            options = self._preds[node]
            if len(options) == 1 or rng is None:
                weights = [counts.get(prev, 0) for prev, _, _ in options]
                if rng is None:
                    pick = int(np.argmax(weights))
                else:
                    pick = 0
            else:
                weights = np.array(
                    [counts.get(prev, 0) for prev, _, _ in options], dtype=float
                )
                pick = int(rng.choice(len(options), p=weights / weights.sum()))
            prev, street_id, _ = options[pick]
            edges_rev.append((prev, node, street_id))
            node = prev
        return self._assemble(list(reversed(edges_rev)))

    def paths(self, limit: int = 4096) -> list[Path]:
        """All minimal routes (DFS over the tight DAG), up to ``limit``."""
        results: list[Path] = []
        stack = [(self._target_node, [])]
        while stack:
            node, suffix = stack.pop()
            if node == self._source_node:
                results.append(self._assemble(suffix))
                if len(results) >= limit:
                    break
                continue
            for prev, street_id, _ in self._preds.get(node, ()):
                stack.append((prev, [(prev, node, street_id)] + suffix))
        return results

    def _assemble(self, edges) -> Path:
        legs = []
        for prev, node, street_id in edges:
            o_from = self._node_offset(prev, street_id)
            o_to = self._node_offset(node, street_id)
            legs.append(Leg(street_id, o_from, o_to))
        return Path(legs, self.length)

    def _node_offset(self, node: int, street_id: int) -> float:
        for ep in (self._src_ep, self._dst_ep):
            if node == ep.node and not ep.at_crossing:
                return ep.point.offset
        return self.graph.streets[street_id].offset_of(node)


def shortest_path(graph: StreetGraph, x: StreetPoint, y: StreetPoint) -> RouteResult:
    """Minimal-arclength route(s) between two street points.

    Raises NoPathError when the points lie in different components.
    """
    n = graph.n_crossings()
    src = _Endpoint(graph, x, n)
    dst = _Endpoint(graph, y, n + 1)
    adj = _routing_adjacency(graph)

    extra: dict[int, list[tuple[int, int, float]]] = {}

    def add_edge(a: int, b: int, street_id: int, w: float) -> None:
        extra.setdefault(a, []).append((b, street_id, w))
        extra.setdefault(b, []).append((a, street_id, w))

    for nb, sid, w in src.edges():
        add_edge(src.node, nb, sid, w)
    for nb, sid, w in dst.edges():
        add_edge(dst.node, nb, sid, w)
    if (
        not src.at_crossing
        and not dst.at_crossing
        and x.street_id == y.street_id
    ):
        add_edge(src.node, dst.node, x.street_id, abs(x.offset - y.offset))

    def neighbors(node: int):
        if node < n:
            yield from adj[node]
        yield from extra.get(node, ())

    dist = {src.node: 0.0}
    settled: set[int] = set()
    heap = [(0.0, src.node)]
    target = dst.node
    target_dist = None
    while heap:
        d, node = heapq.heappop(heap)
        if node in settled:
            continue
        settled.add(node)
        if node == target:
            target_dist = d
        if target_dist is not None and d > target_dist * (1.0 + REL_TIE_TOL) + MERGE_TOL:
            break
        for nb, sid, w in neighbors(node):
            nd = d + w
            if nd < dist.get(nb, math.inf):
                dist[nb] = nd
                heapq.heappush(heap, (nd, nb))
    if target_dist is None:
        raise NoPathError(
            f"no route between street point {x} and {y}"
        )

    # Tight-edge DAG restricted to nodes that can sit on a minimal route.
    slack = REL_TIE_TOL * max(target_dist, 1.0)
    relevant = {k: v for k, v in dist.items() if v <= target_dist + slack}
    preds: dict[int, list[tuple[int, int, float]]] = {}
    for node, d in relevant.items():
        for nb, sid, w in neighbors(node):
            dn = relevant.get(nb)
            if dn is None or w <= 0.0:
                continue
            if dn > d and abs(d + w - dn) <= slack:
                preds.setdefault(nb, []).append((node, sid, w))
    for node in preds:
        preds[node].sort()
    order = sorted(relevant, key=lambda k: (relevant[k], k))

    result = RouteResult(graph, x, y, target_dist, preds, relevant, order)
    result._source_node = src.node
    result._target_node = dst.node
    result._src_ep = src
    result._dst_ep = dst
    if src.node == dst.node or (
        x.street_id == y.street_id and x.offset == y.offset
    ):
        result.length = 0.0
        result._preds = {}
        result._order = [src.node]
        result._target_node = src.node
    return result


def crossing_distances(graph: StreetGraph, x: StreetPoint) -> np.ndarray:
    """Arclength distance from a street point to every crossing.

    Unreachable crossings get +inf.
    """
    n = graph.n_crossings()
    adj = _routing_adjacency(graph)
    dist = np.full(n + 1, np.inf)
    src = _Endpoint(graph, x, n)
    heap = []
    if src.at_crossing:
        dist[src.node] = 0.0
        heap.append((0.0, src.node))
    else:
        s = src.street
        for node, w in ((s.c1, x.offset), (s.c2, s.length - x.offset)):
            if w < dist[node]:
                dist[node] = w
                heapq.heappush(heap, (w, node))
    heapq.heapify(heap)
    settled = np.zeros(n + 1, dtype=bool)
    while heap:
        d, node = heapq.heappop(heap)
        if settled[node]:
            continue
        settled[node] = True
        if node >= n:
            continue
        for nb, _, w in adj[node]:
            nd = d + w
            if nd < dist[nb]:
                dist[nb] = nd
                heapq.heappush(heap, (nd, nb))
    return dist[:n]
