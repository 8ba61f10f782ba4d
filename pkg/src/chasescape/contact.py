"""Contact times between moving devices and the static connectivity graph.

Two devices are in contact while they occupy the same street with
Euclidean distance below the connectivity threshold ``r``.  Along a shared
street both offsets are linear in time, so each overlap of two trajectory
legs contributes at most one open solution interval of ``|a + b*t| < r``;
the full contact set is the merged union of these intervals.

The connectivity graph draws an edge whenever some contact interval is
long enough to hold a closed window of length ``rho``, i.e. has length
strictly greater than ``rho``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError, MissingContactError
from .mobility import Trajectory, street_ball_intervals
from .routing import crossing_distances
from .streets import StreetGraph, StreetPoint


@dataclass
class ContactSet:
    """Sorted disjoint open intervals of contact for one device pair."""

    pair: tuple[int, int]
    intervals: list[tuple[float, float]] = field(default_factory=list)

    def total_time(self) -> float:
        return sum(b - a for a, b in self.intervals)

    def longest(self) -> float:
        return max((b - a for a, b in self.intervals), default=0.0)

    def is_empty(self) -> bool:
        return not self.intervals


def merge_intervals(raw: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Union of open intervals; abutting pieces merge.

    Pieces produced on the two sides of a leg boundary share the boundary
    float exactly, and an isolated boundary instant cannot change the
    contact set, so closing the gap at shared endpoints is sound.
    """
    pieces = sorted((a, b) for a, b in raw if b > a)
    merged: list[tuple[float, float]] = []
    for a, b in pieces:
        if merged and a <= merged[-1][1]:
            if b > merged[-1][1]:
                merged[-1] = (merged[-1][0], b)
        else:
            merged.append((a, b))
    return merged


def contact_intervals(
    traj_i: Trajectory, traj_j: Trajectory, r: float, horizon: float | None = None
) -> ContactSet:
    """Exact contact time set of two trajectories for threshold ``r``."""
    if r <= 0.0:
        raise InvalidParameterError(f"connectivity threshold must be positive, got {r}")
    if horizon is None:
        horizon = min(traj_i.horizon, traj_j.horizon)
    tsA, teA, sidA, o0A, slA = traj_i.global_legs()
    tsB, teB, sidB, o0B, slB = traj_j.global_legs()
    raw: list[tuple[float, float]] = []
    ia = ib = 0
    nA, nB = len(tsA), len(tsB)
    while ia < nA and ib < nB:
        lo = max(tsA[ia], tsB[ib])
        hi = min(teA[ia], teB[ib])
        if hi > lo and lo < horizon:
            hi = min(hi, horizon)
            if sidA[ia] == sidB[ib] and hi > lo:
                # delta(t) = a + b*t on [lo, hi)
                b = slA[ia] - slB[ib]
                a = (o0A[ia] - slA[ia] * tsA[ia]) - (o0B[ib] - slB[ib] * tsB[ib])
                if b == 0.0:
                    if abs(a) < r:
                        raw.append((lo, hi))
                else:
                    t1 = (-r - a) / b
                    t2 = (r - a) / b
                    if t1 > t2:
                        t1, t2 = t2, t1
                    start = max(lo, t1)
                    end = min(hi, t2)
                    if end > start:
                        raw.append((start, end))
        if teA[ia] <= teB[ib]:
            ia += 1
        else:
            ib += 1
    ids = (traj_i.device_id, traj_j.device_id)
    return ContactSet(ids, merge_intervals(raw))


def has_edge(contact: ContactSet, rho: float) -> bool:
    """True iff a closed window of length ``rho`` fits inside one open
    contact interval, i.e. some interval is strictly longer than ``rho``."""
    if rho < 0.0:
        raise InvalidParameterError(f"connection time must be >= 0, got {rho}")
    return any(b - a > rho for a, b in contact.intervals)


def first_edge_witness(contact: ContactSet, rho: float):
    for a, b in contact.intervals:
        if b - a > rho:
            return (a, b)
    return None


# ---------------------------------------------------------------------------
# Pairwise contact store
# ---------------------------------------------------------------------------

class ContactStore:
    """Immutable pair-indexed store of contact sets for one replica.

    Only nonempty sets are held; pairs inside the declared universe read as
    empty, pairs outside it raise.  Construction prunes pairs whose mutual
    distance exceeds the sum of trajectory reaches (plus the threshold),
    which can never be in contact.
    """

    def __init__(self, universe: set[int]):
        self._universe = set(universe)
        self._sets: dict[tuple[int, int], ContactSet] = {}
        self._partners: dict[int, list[int]] = {}

    @staticmethod
    def from_trajectories(
        trajectories: dict[int, Trajectory], r: float, horizon: float,
        prune: bool = True,
    ) -> "ContactStore":
        store = ContactStore(set(trajectories))
        ids = sorted(trajectories)
        if not ids:
            return store
        starts = np.array(
            [trajectories[i].graph.point_at(trajectories[i].start) for i in ids]
        )
        reach = np.array([trajectories[i].max_reach() for i in ids]) + r / 2.0
        n = len(ids)
        for ai in range(n - 1):
            # Conservative prune: two devices can only meet if their initial
            # gap is at most the sum of their trajectory reaches.
            gap = np.hypot(
                starts[ai + 1:, 0] - starts[ai, 0],
                starts[ai + 1:, 1] - starts[ai, 1],
            )
            if prune:
                close = np.nonzero(gap <= reach[ai] + reach[ai + 1:])[0]
            else:
                close = np.arange(n - ai - 1)
            for off in close:
                bi = ai + 1 + int(off)
                cs = contact_intervals(
                    trajectories[ids[ai]], trajectories[ids[bi]], r, horizon
                )
                if not cs.is_empty():
                    store._insert(ids[ai], ids[bi], cs)
        return store

    @staticmethod
    def permanent(ids, horizon: float, edges) -> "ContactStore":
        """Store where each listed edge is in contact on all of (0, horizon)."""
        store = ContactStore(set(ids))
        for i, j in edges:
            store._insert(i, j, ContactSet((min(i, j), max(i, j)),
                                           [(0.0, horizon)]))
        return store

    def _insert(self, i: int, j: int, cs: ContactSet) -> None:
        key = (min(i, j), max(i, j))
        self._sets[key] = ContactSet(key, list(cs.intervals))
        self._partners.setdefault(i, []).append(j)
        self._partners.setdefault(j, []).append(i)

    def get(self, i: int, j: int) -> ContactSet:
        """Contact set of an unordered pair (symmetric by construction)."""
        if i not in self._universe or j not in self._universe:
            raise MissingContactError(f"pair ({i}, {j}) outside contact universe")
        key = (min(i, j), max(i, j))
        cs = self._sets.get(key)
        if cs is None:
            return ContactSet(key, [])
        return cs

    def partners(self, i: int) -> list[int]:
        if i not in self._universe:
            raise MissingContactError(f"device {i} outside contact universe")
        return sorted(self._partners.get(i, ()))

    def nonempty_pairs(self):
        return sorted(self._sets)

    def dump_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["i", "j", "t_start", "t_end"])
            for (i, j) in self.nonempty_pairs():
                for a, b in self._sets[(i, j)].intervals:
                    writer.writerow([i, j, "%.17g" % a, "%.17g" % b])


# ---------------------------------------------------------------------------
# Connectivity graph
# ---------------------------------------------------------------------------

@dataclass
class ConnectivityGraph:
    """Static graph: an edge records a witnessing contact interval longer
    than the connection time ``rho``."""

    vertices: list[int]
    edges: dict[tuple[int, int], tuple[float, float]]
    positions: dict[int, tuple[float, float]] = field(default_factory=dict)
    rho: float = 0.0
    r: float = 0.0

    def n_vertices(self) -> int:
        return len(self.vertices)

    def n_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, i: int) -> list[int]:
        adj = self._adjacency()
        return adj.get(i, [])

    def _adjacency(self) -> dict[int, list[int]]:
        cached = getattr(self, "_adj", None)
        if cached is None:
            cached = {v: [] for v in self.vertices}
            for i, j in self.edges:
                cached[i].append(j)
                cached[j].append(i)
            for v in cached:
                cached[v].sort()
            self._adj = cached
        return cached

    def degree(self, i: int) -> int:
        return len(self.neighbors(i))

    def degrees(self) -> dict[int, int]:
        return {v: self.degree(v) for v in self.vertices}

    def has(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edges

    def induced(self, keep) -> "ConnectivityGraph":
        keep = set(keep)
        return ConnectivityGraph(
            sorted(keep),
            {
                (i, j): w
                for (i, j), w in self.edges.items()
                if i in keep and j in keep
            },
            {v: p for v, p in self.positions.items() if v in keep},
            self.rho,
            self.r,
        )

    def dump_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["i", "j", "witness_start", "witness_end"])
            for (i, j), (a, b) in sorted(self.edges.items()):
                writer.writerow([i, j, "%.17g" % a, "%.17g" % b])

    @staticmethod
    def load_csv(path) -> "ConnectivityGraph":
        edges = {}
        vertices = set()
        with open(path, "r", newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            for row in reader:
                if not row or row[0].startswith("#"):
                    continue
                i, j = int(row[0]), int(row[1])
                a = float(row[2]) if len(row) > 2 and row[2] else 0.0
                b = float(row[3]) if len(row) > 3 and row[3] else math.inf
                edges[(min(i, j), max(i, j))] = (a, b)
                vertices.update((i, j))
        return ConnectivityGraph(sorted(vertices), edges)

    @staticmethod
    def from_edge_list(edges, vertices=None, positions=None) -> "ConnectivityGraph":
        """Fixture constructor: edges as (i, j) pairs, permanent witnesses."""
        edict = {}
        vset = set(vertices or ())
        for i, j in edges:
            edict[(min(i, j), max(i, j))] = (0.0, math.inf)
            vset.update((i, j))
        return ConnectivityGraph(sorted(vset), edict, dict(positions or {}))


def build_connectivity_graph(
    store: ContactStore,
    rho: float,
    vertices=None,
    positions=None,
    r: float = 0.0,
) -> ConnectivityGraph:
    """Edges for every pair whose contact set admits a window of length
    ``rho`` (pruned pairs were never in contact, so pruning cannot lose an
    edge)."""
    if vertices is None:
        vertices = sorted(store._universe)
    edges = {}
    for (i, j) in store.nonempty_pairs():
        witness = first_edge_witness(store.get(i, j), rho)
        if witness is not None:
            edges[(i, j)] = witness
    return ConnectivityGraph(sorted(vertices), edges, dict(positions or {}), rho, r)


# ---------------------------------------------------------------------------
# Geostatistical degree bound
# ---------------------------------------------------------------------------

def max_route_length(graph: StreetGraph, x: StreetPoint, kernel_reach: float) -> float:
    """Largest shortest-route length from ``x`` to any street point within
    Euclidean ``kernel_reach`` (the farthest admissible waypoint)."""
    dist = crossing_distances(graph, x)
    pieces = street_ball_intervals(graph, x, kernel_reach)
    best = 0.0
    own = graph.streets[x.street_id]
    for sid, lo, hi in pieces:
        s = graph.streets[sid]
        d1, d2 = dist[s.c1], dist[s.c2]

        def route(o: float) -> float:
            via = min(d1 + o, d2 + (s.length - o))
            if sid == own.index:
                via = min(via, abs(o - x.offset))
            return via

        candidates = [route(lo), route(hi)]
        # Interior peak of min(d1 + o, d2 + L - o).
        peak = 0.5 * (s.length + d2 - d1)
        if lo < peak < hi:
            candidates.append(route(peak))
        best = max(best, max(candidates))
    return best


def geo_degree_bound(
    graph: StreetGraph,
    points: dict[int, StreetPoint],
    kernel_reach: float,
    r: float,
) -> dict[int, int]:
    """Degree bound from the geostatistical disc model.

    Each device carries a disc of radius (max shortest-route length to a
    reachable waypoint) + r/2; two devices count as neighbors when their
    distance is at most the sum of their radii.  This dominates the
    connectivity-graph degree because a moving device never leaves its own
    disc by more than half the contact range.
    """
    ids = sorted(points)
    radii = {}
    pos = {}
    for i in ids:
        radii[i] = max_route_length(graph, points[i], kernel_reach) + r / 2.0
        pos[i] = graph.point_at(points[i])
    degree = {i: 0 for i in ids}
    for a in range(len(ids)):
        for b in range(a + 1, len(ids)):
            i, j = ids[a], ids[b]
            gap = math.hypot(pos[i][0] - pos[j][0], pos[i][1] - pos[j][1])
            if gap <= radii[i] + radii[j]:
                degree[i] += 1
                degree[j] += 1
    return degree
