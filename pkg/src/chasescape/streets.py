"""Random street systems: generation, street graphs and length thinning.

A street system is a set of planar line segments.  Splitting the segments
at their mutual intersection points yields *streets* (maximal intervals
with no interior intersection) joined at *crossings*.  Generators produce
Poisson-Voronoi and Poisson-Delaunay tessellations on a buffered window
(clipped back to the target window so boundary artifacts stay outside),
plus a deterministic Manhattan grid for comparison fixtures.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay, Voronoi
from scipy.spatial import QhullError

from .errors import CalibrationError, InvalidParameterError
from .geometry import (
    MERGE_TOL,
    PointMerger,
    SegmentGrid,
    Window,
    clip_segment,
    segment_intersection,
)

log = logging.getLogger(__name__)

TAG_PVT = "pvt"
TAG_PDT = "pdt"
TAG_MANHATTAN = "manhattan"
TAG_FIXTURE = "fixture"
GENERATOR_TAGS = (TAG_PVT, TAG_PDT, TAG_MANHATTAN, TAG_FIXTURE)


# ---------------------------------------------------------------------------
# Segment systems
# ---------------------------------------------------------------------------

@dataclass
class SegmentSystem:
    """Planar segments inside a window, before graph construction."""

    segments: list  # [((x1, y1), (x2, y2)), ...]
    window: Window
    generator_tag: str = TAG_FIXTURE
    gamma: float | None = None
    seed: int | None = None
    buffer: float = 0.0

    def total_length(self) -> float:
        return sum(
            math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in self.segments
        )

    def length_inside(self, window: Window) -> float:
        """Total segment length clipped to ``window``."""
        total = 0.0
        for a, b in self.segments:
            clipped = clip_segment(a, b, window)
            if clipped is not None:
                (x0, y0), (x1, y1) = clipped
                total += math.hypot(x1 - x0, y1 - y0)
        return total

    def validate(self) -> None:
        """Check the construction invariants; raises on violation."""
        buffered = self.window.buffered(self.buffer + MERGE_TOL)
        for a, b in self.segments:
            if math.hypot(b[0] - a[0], b[1] - a[1]) <= 0.0:
                raise InvalidParameterError(f"zero-length segment at {a}")
            for x, y in (a, b):
                if not buffered.contains(x, y, tol=1e-7):
                    raise InvalidParameterError(
                        f"segment endpoint ({x}, {y}) outside buffered window"
                    )
        _reject_positive_overlaps(self.segments)


def _reject_positive_overlaps(segments) -> None:
    """Reject pairs of segments sharing a sub-segment of positive length."""
    if len(segments) < 2:
        return
    lengths = [math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in segments]
    grid = SegmentGrid(segments, cell=max(np.median(lengths), 10 * MERGE_TOL))
    for i, j in grid.candidate_pairs():
        (p0, p1), (q0, q1) = segments[i], segments[j]
        rx, ry = p1[0] - p0[0], p1[1] - p0[1]
        sx, sy = q1[0] - q0[0], q1[1] - q0[1]
        cross = rx * sy - ry * sx
        if abs(cross) > MERGE_TOL * max(1.0, abs(rx) + abs(ry)) * max(
            1.0, abs(sx) + abs(sy)
        ):
            continue
        # Parallel pair: overlap exists iff q's endpoints project inside p
        # with near-zero perpendicular offset for an interval of positive length.
        L2 = rx * rx + ry * ry
        if L2 == 0.0:
            continue
        offs = []
        for qx, qy in (q0, q1):
            t = ((qx - p0[0]) * rx + (qy - p0[1]) * ry) / L2
            perp = abs((qx - p0[0]) * ry - (qy - p0[1]) * rx) / math.sqrt(L2)
            offs.append((t, perp))
        if max(o[1] for o in offs) > 10 * MERGE_TOL:
            continue
        lo = max(0.0, min(offs[0][0], offs[1][0]))
        hi = min(1.0, max(offs[0][0], offs[1][0]))
        if (hi - lo) * math.sqrt(L2) > 10 * MERGE_TOL:
            raise InvalidParameterError(
                f"segments {i} and {j} overlap along positive length"
            )


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def _poisson_points(gamma: float, window: Window, rng) -> np.ndarray:
    """Poisson(gamma * area) uniform points; resamples empty draws."""
    lam = gamma * window.area
    attempt = 0
    while True:
        n = int(rng.poisson(lam))
        if n > 0:
            break
        attempt += 1
        log.info(
            "empty Poisson draw (lambda=%.3g, attempt %d, p0=%.3g); resampling",
            lam, attempt, math.exp(-lam),
        )
    xs = rng.uniform(window.xmin, window.xmax, size=n)
    ys = rng.uniform(window.ymin, window.ymax, size=n)
    return np.column_stack([xs, ys])


def _voronoi_segments(points: np.ndarray, window: Window, buffered: Window):
    """Voronoi edges between the given seed points, clipped to ``window``.

    Far-away padding points close every cell, so each edge between two real
    seeds is a finite ridge; the padding lives far outside the window and
    cannot affect clipped geometry.
    """
    n_real = len(points)
    if n_real == 0:
        return []
    cx, cy = buffered.center
    big = 100.0 * (buffered.side + 1.0)
    pads = np.array(
        [(cx + big, cy), (cx - big, cy), (cx, cy + big), (cx, cy - big),
         (cx + big, cy + big), (cx - big, cy + big),
         (cx + big, cy - big), (cx - big, cy - big)]
    )
    allpts = np.vstack([points, pads])
    try:
        vor = Voronoi(allpts)
    except QhullError:
        vor = Voronoi(_perturb(allpts))
    segments = []
    for (p, q), (v0, v1) in zip(vor.ridge_points, vor.ridge_vertices):
        if p >= n_real or q >= n_real:
            continue
        if v0 < 0 or v1 < 0:
            continue  # cannot occur with padding; defensive
        clipped = clip_segment(vor.vertices[v0], vor.vertices[v1], window)
        if clipped is not None:
            segments.append(clipped)
    return segments


def _perturb(points: np.ndarray, rel_scale: float = 1e-9) -> np.ndarray:
    """Deterministic index-ordered jitter to break exact degeneracies."""
    out = np.asarray(points, dtype=float).copy()
    scale = rel_scale * max(1.0, float(np.abs(out).max()))
    for i in range(len(out)):
        out[i, 0] += scale * ((i % 7) + 1)
        out[i, 1] += scale * ((i * i % 11) + 1)
    return out


def _triangulate(points: np.ndarray) -> Delaunay:
    """Delaunay with an escalating deterministic perturbation fallback for
    exactly degenerate (e.g. collinear) fixture inputs."""
    try:
        return Delaunay(points)
    except QhullError:
        pass
    for rel_scale in (1e-9, 1e-7, 1e-5, 1e-3):
        try:
            return Delaunay(_perturb(points, rel_scale))
        except QhullError:
            continue
    raise InvalidParameterError(
        "point set too degenerate to triangulate even after perturbation"
    )


def generate_pvt(
    gamma: float,
    window: Window,
    rng,
    buffer: float | None = None,
    points: np.ndarray | None = None,
    seed: int | None = None,
) -> SegmentSystem:
    """Poisson-Voronoi street system clipped to ``window``.

    ``gamma`` is the seed intensity per unit area.  ``points`` overrides the
    Poisson sample (fixture mode).  The tessellation is built on the window
    inflated by ``buffer`` (default 3/sqrt(gamma)) so that statistics inside
    the window are unaffected by missing far-away seeds.
    """
    if points is None and gamma <= 0.0:
        raise InvalidParameterError(f"gamma must be positive, got {gamma}")
    if window.side <= 0.0:
        raise InvalidParameterError("window side must be positive")
    if buffer is None:
        buffer = 3.0 / math.sqrt(gamma) if gamma and gamma > 0 else 0.0
    buffered = window.buffered(buffer)
    if points is None:
        points = _poisson_points(gamma, buffered, rng)
    else:
        points = np.asarray(points, dtype=float).reshape(-1, 2)
    segments = _voronoi_segments(points, window, buffered)
    return SegmentSystem(segments, window, TAG_PVT, gamma, seed, buffer)


def generate_pdt(
    gamma: float,
    window: Window,
    rng,
    buffer: float | None = None,
    points: np.ndarray | None = None,
    seed: int | None = None,
) -> SegmentSystem:
    """Poisson-Delaunay street system clipped to ``window``."""
    if points is None and gamma <= 0.0:
        raise InvalidParameterError(f"gamma must be positive, got {gamma}")
    if window.side <= 0.0:
        raise InvalidParameterError("window side must be positive")
    if buffer is None:
        buffer = 3.0 / math.sqrt(gamma) if gamma and gamma > 0 else 0.0
    buffered = window.buffered(buffer)
    if points is None:
        points = _poisson_points(gamma, buffered, rng)
    else:
        points = np.asarray(points, dtype=float).reshape(-1, 2)
    segments = []
    if len(points) == 2:
        edges = [(0, 1)]
    elif len(points) < 2:
        edges = []
    else:
        tri = _triangulate(points)
        edge_set = set()
        for simplex in tri.simplices:
            for k in range(3):
                a, b = int(simplex[k]), int(simplex[(k + 1) % 3])
                edge_set.add((a, b) if a < b else (b, a))
        edges = sorted(edge_set)
    for a, b in edges:
        clipped = clip_segment(points[a], points[b], window)
        if clipped is not None:
            segments.append(clipped)
    return SegmentSystem(segments, window, TAG_PDT, gamma, seed, buffer)


def generate_manhattan(spacing: float, window: Window) -> SegmentSystem:
    """Deterministic axis-aligned grid anchored at the window origin."""
    if spacing <= 0.0:
        raise InvalidParameterError(f"spacing must be positive, got {spacing}")
    segments = []
    n_lines = int(math.floor(window.side / spacing + 1e-12))
    for k in range(n_lines + 1):
        x = window.xmin + k * spacing
        segments.append(((x, window.ymin), (x, window.ymax)))
        y = window.ymin + k * spacing
        segments.append(((window.xmin, y), (window.xmax, y)))
    return SegmentSystem(segments, window, TAG_MANHATTAN, None, None, 0.0)


# ---------------------------------------------------------------------------
# Street graphs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StreetPoint:
    """Canonical on-street coordinate: arclength offset from the street's
    first crossing."""

    street_id: int
    offset: float


@dataclass
class Street:
    index: int
    c1: int
    c2: int
    length: float
    geometry: np.ndarray  # (2, 2): endpoint coordinates, c1 first

    def other_end(self, crossing: int) -> int:
        return self.c2 if crossing == self.c1 else self.c1

    def offset_of(self, crossing: int) -> float:
        return 0.0 if crossing == self.c1 else self.length


@dataclass
class StreetGraph:
    """Streets and crossings of a segment system, with adjacency."""

    crossings: np.ndarray  # (n, 2)
    streets: list[Street]
    adjacency: list[list[int]]  # crossing id -> incident street ids
    window: Window
    meta: dict = field(default_factory=dict)

    # -- basic queries ------------------------------------------------

    def n_crossings(self) -> int:
        return len(self.crossings)

    def n_streets(self) -> int:
        return len(self.streets)

    def total_length(self) -> float:
        return float(sum(s.length for s in self.streets))

    def street_lengths(self) -> np.ndarray:
        return np.array([s.length for s in self.streets], dtype=float)

    def degree(self, crossing: int) -> int:
        return len(self.adjacency[crossing])

    def point_at(self, point: StreetPoint) -> tuple[float, float]:
        """Plane coordinates of a street point."""
        s = self.streets[point.street_id]
        if not (-MERGE_TOL <= point.offset <= s.length + MERGE_TOL):
            raise InvalidParameterError(
                f"offset {point.offset} outside street of length {s.length}"
            )
        f = 0.0 if s.length == 0.0 else min(max(point.offset / s.length, 0.0), 1.0)
        (x1, y1), (x2, y2) = s.geometry
        return (x1 + f * (x2 - x1), y1 + f * (y2 - y1))

    def translate(self, dx: float, dy: float) -> "StreetGraph":
        streets = [
            Street(s.index, s.c1, s.c2, s.length, s.geometry + np.array([dx, dy]))
            for s in self.streets
        ]
        return StreetGraph(
            self.crossings + np.array([dx, dy]),
            streets,
            [list(a) for a in self.adjacency],
            self.window.translate(dx, dy),
            dict(self.meta),
        )

    # -- connectivity ---------------------------------------------------

    def component_labels(self) -> np.ndarray:
        """Connected-component label per crossing (iterative union-find)."""
        parent = np.arange(self.n_crossings())

        def find(i: int) -> int:
            root = i
            while parent[root] != root:
                root = parent[root]
            while parent[i] != root:
                parent[i], i = root, parent[i]
            return root

        for s in self.streets:
            ra, rb = find(s.c1), find(s.c2)
            if ra != rb:
                parent[rb] = ra
        return np.array([find(i) for i in range(self.n_crossings())])

    def has_left_right_crossing(self, tol: float = 1e-7) -> bool:
        """True iff one connected component touches both vertical window
        edges."""
        if self.n_crossings() == 0:
            return False
        labels = self.component_labels()
        xs = self.crossings[:, 0]
        touches_left = set(labels[xs <= self.window.xmin + tol])
        touches_right = set(labels[xs >= self.window.xmax - tol])
        return len(touches_left & touches_right) > 0


def build_graph(system: SegmentSystem) -> StreetGraph:
    """Split segments at mutual intersections into maximal streets.

    All pairwise intersection points are computed, each segment is cut at
    its intersections, and coincident points are merged within the global
    1e-9 tolerance.  The output streets have no crossing in their relative
    interior.
    """
    segs = [(tuple(map(float, a)), tuple(map(float, b))) for a, b in system.segments]
    merger = PointMerger()
    cuts: list[list[tuple[float, int]]] = []
    for a, b in segs:
        ia = merger.add(*a)
        ib = merger.add(*b)
        cuts.append([(0.0, ia), (1.0, ib)])
    if segs:
        lengths = [math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in segs]
        grid = SegmentGrid(segs, cell=max(float(np.median(lengths)), 10 * MERGE_TOL))
        for i, j in grid.candidate_pairs():
            pt = segment_intersection(*segs[i], *segs[j])
            if pt is None:
                continue
            idx = merger.add(*pt)
            for k in (i, j):
                a, b = segs[k]
                dx, dy = b[0] - a[0], b[1] - a[1]
                L2 = dx * dx + dy * dy
                t = ((pt[0] - a[0]) * dx + (pt[1] - a[1]) * dy) / L2
                cuts[k].append((min(max(t, 0.0), 1.0), idx))

    crossings = merger.points
    streets: list[Street] = []
    for k, (a, b) in enumerate(segs):
        entries = sorted(set(cuts[k]))
        # Collapse parameter duplicates that merged to the same point.
        chain: list[int] = []
        for _, idx in entries:
            if not chain or chain[-1] != idx:
                chain.append(idx)
        for ia, ib in zip(chain[:-1], chain[1:]):
            (x1, y1), (x2, y2) = crossings[ia], crossings[ib]
            length = math.hypot(x2 - x1, y2 - y1)
            if length <= MERGE_TOL:
                continue
            geom = np.array([[x1, y1], [x2, y2]], dtype=float)
            streets.append(Street(len(streets), ia, ib, length, geom))

    adjacency: list[list[int]] = [[] for _ in crossings]
    for s in streets:
        adjacency[s.c1].append(s.index)
        adjacency[s.c2].append(s.index)
    meta = {
        "generator": system.generator_tag,
        "gamma": system.gamma,
        "seed": system.seed,
        "buffer": system.buffer,
    }
    return StreetGraph(np.array(crossings, dtype=float).reshape(-1, 2),
                       streets, adjacency, system.window, meta)


def thin_by_length(graph: StreetGraph, a: float) -> StreetGraph:
    """Remove streets shorter than ``a``; drop crossings left isolated."""
    if a < 0:
        raise InvalidParameterError(f"thinning length must be >= 0, got {a}")
    kept = [s for s in graph.streets if s.length >= a]
    used = sorted({c for s in kept for c in (s.c1, s.c2)})
    remap = {old: new for new, old in enumerate(used)}
    crossings = (
        graph.crossings[used]
        if used
        else np.empty((0, 2), dtype=float)
    )
    streets = [
        Street(i, remap[s.c1], remap[s.c2], s.length, s.geometry.copy())
        for i, s in enumerate(kept)
    ]
    adjacency: list[list[int]] = [[] for _ in used]
    for s in streets:
        adjacency[s.c1].append(s.index)
        adjacency[s.c2].append(s.index)
    return StreetGraph(crossings, streets, adjacency, graph.window,
                       dict(graph.meta, thinned_at=a))


# ---------------------------------------------------------------------------
# Calibration and diagnostics
# ---------------------------------------------------------------------------

def make_generator(tag: str, gamma_or_spacing: float, buffer: float | None = None):
    """Factory returning ``f(window, rng) -> SegmentSystem`` for a tag."""
    tag = tag.lower()
    if tag == TAG_PVT:
        return lambda window, rng: generate_pvt(gamma_or_spacing, window, rng, buffer)
    if tag == TAG_PDT:
        return lambda window, rng: generate_pdt(gamma_or_spacing, window, rng, buffer)
    if tag == TAG_MANHATTAN:
        return lambda window, rng: generate_manhattan(gamma_or_spacing, window)
    raise InvalidParameterError(f"unknown generator tag {tag!r}")


def estimate_length_intensity(
    generator, window_side: float, replicas: int, rng
) -> float:
    """Monte Carlo mean of street length per unit area."""
    window = Window.centered(window_side)
    total = 0.0
    for _ in range(replicas):
        system = generator(window, rng)
        total += system.length_inside(window) / window.area
    return total / replicas


def normalize_intensity(
    generator_tag: str,
    target_length_intensity: float = 1.0,
    rng=None,
    window_side: float = 40.0,
    replicas: int = 24,
    rel_tol: float = 0.01,
    max_iter: int = 40,
) -> float:
    """Seed intensity (or Manhattan spacing) matching a target street-length
    intensity.

    For tessellations the answer is found by bisection on gamma against a
    Monte Carlo estimate of mean length per unit area; edge length scales
    like sqrt(gamma), so the map is monotone.  For the Manhattan grid the
    closed form spacing 2/target is returned directly.
    """
    if target_length_intensity <= 0.0:
        raise InvalidParameterError("target length intensity must be positive")
    tag = generator_tag.lower()
    if tag == TAG_MANHATTAN:
        return 2.0 / target_length_intensity
    if tag not in (TAG_PVT, TAG_PDT):
        raise InvalidParameterError(f"cannot calibrate generator {generator_tag!r}")
    if rng is None:
        rng = np.random.default_rng()

    def measure(gamma: float) -> float:
        return estimate_length_intensity(
            make_generator(tag, gamma), window_side, replicas, rng
        )

    t = target_length_intensity
    lo, hi = 0.01 * t * t, 4.0 * t * t
    est_lo, est_hi = measure(lo), measure(hi)
    for _ in range(6):
        if est_lo <= t:
            break
        lo /= 4.0
        est_lo = measure(lo)
    for _ in range(6):
        if est_hi >= t:
            break
        hi *= 4.0
        est_hi = measure(hi)
    if not (est_lo <= t <= est_hi):
        raise CalibrationError(
            f"target {t} not bracketed by gamma in [{lo}, {hi}]", bracket=(lo, hi)
        )
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        est = measure(mid)
        if abs(est - t) <= rel_tol * t:
            return mid
        if est < t:
            lo = mid
        else:
            hi = mid
    raise CalibrationError(
        f"no convergence after {max_iter} bisection steps; last bracket "
        f"[{lo}, {hi}]",
        bracket=(lo, hi),
    )


@dataclass
class CrossingEstimate:
    fraction: float
    lower: float
    upper: float
    replicas: int
    successes: int


def crossing_probability(
    generator, a: float, window_side: float, replicas: int, rng
) -> CrossingEstimate:
    """Fraction of replicas whose length-thinned system spans the window
    left to right, with a Wilson 95% interval.

    This is the finite-window surrogate for well-connectedness of the
    thinned system: thinning is nested in ``a`` under a shared realization,
    so the fraction is non-increasing in ``a`` for shared seeds.
    """
    if replicas < 1:
        raise InvalidParameterError("replicas must be >= 1")
    window = Window.centered(window_side)
    hits = 0
    for _ in range(replicas):
        system = generator(window, rng)
        graph = thin_by_length(build_graph(system), a) if a > 0 else build_graph(system)
        if graph.has_left_right_crossing():
            hits += 1
    lower, upper = wilson_interval(hits, replicas)
    return CrossingEstimate(hits / replicas, lower, upper, replicas, hits)


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054):
    """Wilson 95% confidence interval for a binomial proportion."""
    if trials <= 0:
        raise InvalidParameterError("trials must be positive")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2.0 * trials)) / denom
    half = (
        z
        * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials))
        / denom
    )
    return (max(0.0, center - half), min(1.0, center + half))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def save_segments(system: SegmentSystem, path) -> None:
    """Line-oriented text dump: one ``x1 y1 x2 y2`` per segment."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            "# window=%.17g,%.17g,%.17g generator=%s gamma=%s seed=%s buffer=%.17g\n"
            % (
                system.window.xmin,
                system.window.ymin,
                system.window.side,
                system.generator_tag,
                "none" if system.gamma is None else "%.17g" % system.gamma,
                "none" if system.seed is None else str(system.seed),
                system.buffer,
            )
        )
        for (x1, y1), (x2, y2) in system.segments:
            fh.write("%.17g %.17g %.17g %.17g\n" % (x1, y1, x2, y2))


def load_segments(path) -> SegmentSystem:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("# window="):
            raise InvalidParameterError(f"bad segment file header: {header!r}")
        fields = dict(
            item.split("=", 1) for item in header[2:].split() if "=" in item
        )
        wx, wy, side = (float(v) for v in fields["window"].split(","))
        gamma = None if fields.get("gamma") in (None, "none") else float(fields["gamma"])
        seed = None if fields.get("seed") in (None, "none") else int(fields["seed"])
        buffer = float(fields.get("buffer", 0.0))
        segments = []
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            x1, y1, x2, y2 = (float(v) for v in line.split())
            segments.append(((x1, y1), (x2, y2)))
    return SegmentSystem(
        segments, Window(wx, wy, side), fields.get("generator", TAG_FIXTURE),
        gamma, seed, buffer,
    )
