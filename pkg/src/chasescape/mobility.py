"""Device mobility: waypoint kernels, speeds and bouncing trajectories.

A device picks a target on the street system, walks there along a shortest
route at its own constant speed, bounces straight back, and repeats forever.
Trajectories are breakpoint schedules (no time stepping), so positions and
street occupancy at any instant are evaluated exactly from the leg that
contains the instant; legs are half-open in time, which makes the street
at a crossing instant the street being entered.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .routing import Leg, shortest_path
from .streets import StreetGraph, StreetPoint


@dataclass(frozen=True)
class SpeedDistribution:
    """Speed law: a point mass or a uniform range, in length per time."""

    kind: str  # "dirac" | "uniform"
    v_min: float
    v_max: float

    def __post_init__(self):
        if not (0.0 < self.v_min <= self.v_max < math.inf):
            raise InvalidParameterError(
                f"need 0 < v_min <= v_max < inf, got [{self.v_min}, {self.v_max}]"
            )
        if self.kind not in ("dirac", "uniform"):
            raise InvalidParameterError(f"unknown speed kind {self.kind!r}")
        if self.kind == "dirac" and self.v_min != self.v_max:
            raise InvalidParameterError("dirac speed needs v_min == v_max")

    @staticmethod
    def dirac(v: float) -> "SpeedDistribution":
        return SpeedDistribution("dirac", v, v)

    @staticmethod
    def uniform(v_min: float, v_max: float) -> "SpeedDistribution":
        return SpeedDistribution("uniform", v_min, v_max)

    def sample(self, rng, size=None):
        if self.kind == "dirac":
            return self.v_min if size is None else np.full(size, self.v_min)
        return rng.uniform(self.v_min, self.v_max, size=size)


def street_frames(graph: StreetGraph):
    """Cached per-street (origin, unit vector) arrays for vectorized
    offset-to-plane conversion."""
    cached = graph.meta.get("_street_frames")
    if cached is not None:
        return cached
    n = graph.n_streets()
    origins = np.zeros((n, 2))
    units = np.zeros((n, 2))
    for s in graph.streets:
        origins[s.index] = s.geometry[0]
        if s.length > 0.0:
            units[s.index] = (s.geometry[1] - s.geometry[0]) / s.length
    graph.meta["_street_frames"] = (origins, units)
    return origins, units


# ---------------------------------------------------------------------------
# Waypoint kernels
# ---------------------------------------------------------------------------

def street_ball_intervals(graph: StreetGraph, x: StreetPoint, radius: float):
    """Offset intervals of every street lying within Euclidean ``radius``
    of the plane position of ``x``.

    Returns [(street_id, o_lo, o_hi)] with o_hi > o_lo.  The one-dimensional
    set they describe is the intersection of the street system with the
    closed disc around ``x``.
    """
    px, py = graph.point_at(x)
    r2 = radius * radius
    out = []
    for s in graph.streets:
        (x1, y1), (x2, y2) = s.geometry
        # Quadratic |A + u*(B-A) - P|^2 <= r^2 in u; convex, so the
        # sub-level set is a single interval.
        dx, dy = x2 - x1, y2 - y1
        fx, fy = x1 - px, y1 - py
        a = dx * dx + dy * dy
        b = 2.0 * (fx * dx + fy * dy)
        c = fx * fx + fy * fy - r2
        if a == 0.0:
            continue
        disc = b * b - 4.0 * a * c
        if disc <= 0.0:
            continue
        root = math.sqrt(disc)
        u_lo = max((-b - root) / (2.0 * a), 0.0)
        u_hi = min((-b + root) / (2.0 * a), 1.0)
        if u_hi <= u_lo:
            continue
        out.append((s.index, u_lo * s.length, u_hi * s.length))
    return out


def _component_of_street(graph: StreetGraph):
    """Cached component label per street (label of its first crossing)."""
    cached = graph.meta.get("_street_components")
    if cached is None:
        labels = graph.component_labels()
        cached = np.array([labels[s.c1] for s in graph.streets]) if graph.streets \
            else np.empty(0, dtype=int)
        graph.meta["_street_components"] = cached
    return cached


class UniformBallKernel:
    """Waypoint law: uniform on the street set within a fixed Euclidean
    radius of the current position.

    The target street piece is chosen proportionally to its clipped length,
    then the offset uniformly inside the piece, which is exactly the uniform
    distribution on the one-dimensional intersection.  Window clipping can
    disconnect the street graph, so pieces outside the device's component
    (which exist only as boundary artifacts) are excluded to keep every
    target reachable.
    """

    def __init__(self, radius: float):
        if radius <= 0.0:
            raise InvalidParameterError(f"kernel radius must be positive, got {radius}")
        self.radius = radius

    @property
    def reach(self) -> float:
        return self.radius

    def sample(self, graph: StreetGraph, x: StreetPoint, rng) -> StreetPoint:
        pieces = street_ball_intervals(graph, x, self.radius)
        comp = _component_of_street(graph)
        own = comp[x.street_id]
        pieces = [p for p in pieces if comp[p[0]] == own]
        if not pieces:
            # x's own street always intersects its ball; only degenerate
            # zero-length systems can land here.
            return x
        lengths = np.array([hi - lo for _, lo, hi in pieces])
        pick = int(rng.choice(len(pieces), p=lengths / lengths.sum()))
        sid, lo, hi = pieces[pick]
        return StreetPoint(sid, float(rng.uniform(lo, hi)))


class FixedTargetKernel:
    """Degenerate kernel always returning one target (test fixture)."""

    def __init__(self, target: StreetPoint, reach: float = 0.0):
        self.target = target
        self.reach = reach

    def sample(self, graph, x, rng) -> StreetPoint:
        return self.target


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------

OUTBOUND = "outbound"
INBOUND = "inbound"


class Trajectory:
    """Periodic bouncing motion along a frozen shortest route.

    The one-way pass is a sequence of legs; the return pass retraces them.
    ``position_at`` reduces any time into the first period with ``fmod``
    and evaluates the containing leg, so evaluation is exact piecewise
    linear arithmetic with no accumulation over periods.
    """

    def __init__(self, graph: StreetGraph, legs_oneway: list[Leg], speed: float,
                 horizon: float, device_id: int | None = None):
        if speed <= 0.0:
            raise InvalidParameterError(f"speed must be positive, got {speed}")
        if horizon <= 0.0:
            raise InvalidParameterError(f"horizon must be positive, got {horizon}")
        self.graph = graph
        self.device_id = device_id
        self.speed = speed
        self.horizon = horizon
        self.legs_oneway = [leg for leg in legs_oneway if leg.length > 0.0]
        self.one_way_length = sum(leg.length for leg in self.legs_oneway)
        if self.legs_oneway:
            first = self.legs_oneway[0]
            last = self.legs_oneway[-1]
            self.start = StreetPoint(first.street_id, first.o_from)
            self.target = StreetPoint(last.street_id, last.o_to)
        elif legs_oneway:
            self.start = StreetPoint(legs_oneway[0].street_id, legs_oneway[0].o_from)
            self.target = self.start
        else:
            raise InvalidParameterError("trajectory needs at least one leg")
        self._build_period_table()

    @property
    def stationary(self) -> bool:
        return self.one_way_length == 0.0

    @property
    def period(self) -> float:
        return math.inf if self.stationary else 2.0 * self.one_way_length / self.speed

    @property
    def one_way_time(self) -> float:
        return math.inf if self.stationary else self.one_way_length / self.speed

    def _build_period_table(self):
        """Per-period leg table: start time, street, offset origin, slope."""
        t0s, sids, o0s, slopes = [], [], [], []
        t = 0.0
        v = self.speed
        for leg in self.legs_oneway:
            t0s.append(t)
            sids.append(leg.street_id)
            o0s.append(leg.o_from)
            slopes.append(v if leg.o_to > leg.o_from else -v)
            t += leg.length / v
        self._turn_time = t
        for leg in reversed(self.legs_oneway):
            t0s.append(t)
            sids.append(leg.street_id)
            o0s.append(leg.o_to)
            slopes.append(v if leg.o_from > leg.o_to else -v)
            t += leg.length / v
        if not t0s:  # stationary
            t0s, sids, o0s, slopes = [0.0], [self.start.street_id], [self.start.offset], [0.0]
            self._turn_time = math.inf
        self._t0 = np.array(t0s)
        self._sid = np.array(sids, dtype=int)
        self._o0 = np.array(o0s)
        self._slope = np.array(slopes)

    # -- evaluation -------------------------------------------------------

    def _phase(self, t):
        if self.stationary:
            return np.zeros_like(np.asarray(t, dtype=float))
        return np.fmod(np.asarray(t, dtype=float), self.period)

    def positions_at(self, t):
        """Vectorized state query.

        Returns (points (n,2), street_ids (n,), outbound (n,) bool) for an
        array of times inside [0, horizon].
        """
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(ts < 0.0) or np.any(ts > self.horizon):
            raise InvalidParameterError("query time outside [0, horizon]")
        phase = self._phase(ts)
        idx = np.searchsorted(self._t0, phase, side="right") - 1
        idx = np.clip(idx, 0, len(self._t0) - 1)
        offsets = self._o0[idx] + self._slope[idx] * (phase - self._t0[idx])
        sids = self._sid[idx]
        outbound = phase < self._turn_time
        origins, units = street_frames(self.graph)
        pts = origins[sids] + units[sids] * offsets[:, None]
        return pts, sids, outbound

    def position_at(self, t: float):
        """Plane point, street id and direction at one instant."""
        pts, sids, outbound = self.positions_at(float(t))
        return (
            (float(pts[0, 0]), float(pts[0, 1])),
            int(sids[0]),
            OUTBOUND if bool(outbound[0]) else INBOUND,
        )

    def street_offset_at(self, t: float) -> tuple[int, float]:
        phase = float(self._phase(float(t)))
        idx = int(np.searchsorted(self._t0, phase, side="right") - 1)
        idx = max(0, min(idx, len(self._t0) - 1))
        return int(self._sid[idx]), float(self._o0[idx] + self._slope[idx] * (phase - self._t0[idx]))

    # -- schedules for contact computation ---------------------------------

    def global_legs(self):
        """Leg table covering [0, horizon]: arrays (t_start, t_end, street,
        offset_at_start, slope).  Cached."""
        cached = getattr(self, "_global_legs", None)
        if cached is not None:
            return cached
        if self.stationary:
            tab = (
                np.array([0.0]),
                np.array([self.horizon]),
                self._sid.copy(),
                self._o0.copy(),
                np.array([0.0]),
            )
            self._global_legs = tab
            return tab
        p = self.period
        n_legs = len(self._t0)
        reps = int(math.ceil(self.horizon / p)) + 1
        t_start, t_end, sids, o0s, slopes = [], [], [], [], []
        for k in range(reps):
            base = k * p
            if base >= self.horizon:
                break
            for j in range(n_legs):
                ts = base + self._t0[j]
                te = base + (self._t0[j + 1] if j + 1 < n_legs else p)
                if ts >= self.horizon:
                    break
                t_start.append(ts)
                t_end.append(min(te, self.horizon))
                sids.append(self._sid[j])
                o0s.append(self._o0[j])
                slopes.append(self._slope[j])
        tab = (
            np.array(t_start),
            np.array(t_end),
            np.array(sids, dtype=int),
            np.array(o0s),
            np.array(slopes),
        )
        self._global_legs = tab
        return tab

    def max_reach(self) -> float:
        """Largest Euclidean displacement from the starting position."""
        start = np.array(self.graph.point_at(self.start))
        best = 0.0
        for leg in self.legs_oneway:
            for off in (leg.o_from, leg.o_to):
                p = np.array(self.graph.point_at(StreetPoint(leg.street_id, off)))
                best = max(best, float(np.hypot(*(p - start))))
        return best

    def max_distance_from(self, origin, t_from: float, t_to: float) -> float:
        """Max Euclidean distance from ``origin`` over a time window.

        Distance to a fixed point is convex along each linear piece, so the
        maximum sits at a leg boundary or at the window ends.
        """
        t_from = max(0.0, t_from)
        t_to = min(self.horizon, t_to)
        if t_to < t_from:
            return 0.0
        ts, te, _, _, _ = self.global_legs()
        times = [t_from, t_to]
        lo = np.searchsorted(ts, t_from, side="left")
        hi = np.searchsorted(ts, t_to, side="right")
        times.extend(float(v) for v in ts[lo:hi])
        pts, _, _ = self.positions_at(np.array(sorted(set(times))))
        d = np.hypot(pts[:, 0] - origin[0], pts[:, 1] - origin[1])
        return float(d.max())

    # -- serialization ------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "device_id": self.device_id,
            "speed": self.speed,
            "horizon": self.horizon,
            "one_way_length": self.one_way_length,
            "legs": [
                {"street": leg.street_id, "from": leg.o_from, "to": leg.o_to}
                for leg in self.legs_oneway
            ],
            "start": {"street": self.start.street_id, "offset": self.start.offset},
            "target": {"street": self.target.street_id, "offset": self.target.offset},
        }

    def dump_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=1, sort_keys=True)


def build_trajectory(
    graph: StreetGraph,
    start: StreetPoint,
    target: StreetPoint,
    speed: float,
    horizon: float,
    rng=None,
    device_id: int | None = None,
) -> Trajectory:
    """Trajectory bouncing between ``start`` and ``target`` at ``speed``.

    A shortest-route tie is resolved uniformly at construction time and
    frozen for the life of the trajectory.
    """
    if start.street_id == target.street_id and start.offset == target.offset:
        return Trajectory(graph, [Leg(start.street_id, start.offset, start.offset)],
                          speed, horizon, device_id)
    route = shortest_path(graph, start, target)
    path = route.sample(rng)
    return Trajectory(graph, path.legs, speed, horizon, device_id)
