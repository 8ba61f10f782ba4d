"""Low-level planar geometry: windows, segment clipping and intersection.

All coordinates are plain floats in length units.  One merge tolerance
(``MERGE_TOL``, absolute) governs point coincidence everywhere; geometric
predicates are otherwise exact in double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Absolute tolerance for declaring two plane points coincident.
MERGE_TOL = 1e-9


@dataclass(frozen=True)
class Window:
    """Axis-aligned square observation window."""

    xmin: float
    ymin: float
    side: float

    @property
    def xmax(self) -> float:
        return self.xmin + self.side

    @property
    def ymax(self) -> float:
        return self.ymin + self.side

    @property
    def center(self) -> tuple[float, float]:
        return (self.xmin + self.side / 2.0, self.ymin + self.side / 2.0)

    @property
    def area(self) -> float:
        return self.side * self.side

    @staticmethod
    def centered(side: float, center: tuple[float, float] = (0.0, 0.0)) -> "Window":
        cx, cy = center
        return Window(cx - side / 2.0, cy - side / 2.0, side)

    def buffered(self, buffer: float) -> "Window":
        return Window(self.xmin - buffer, self.ymin - buffer, self.side + 2.0 * buffer)

    def shrunk(self, fraction: float) -> "Window":
        """Concentric window with ``fraction`` of the side length."""
        inner = self.side * fraction
        cx, cy = self.center
        return Window(cx - inner / 2.0, cy - inner / 2.0, inner)

    def contains(self, x: float, y: float, tol: float = 0.0) -> bool:
        return (self.xmin - tol <= x <= self.xmax + tol
                and self.ymin - tol <= y <= self.ymax + tol)

    def translate(self, dx: float, dy: float) -> "Window":
        return Window(self.xmin + dx, self.ymin + dy, self.side)


def clip_segment(p0, p1, window: Window):
    """Clip segment ``p0-p1`` to a window (Liang-Barsky).

    Returns the clipped endpoint pair, or None if the segment misses the
    window or the clipped piece has zero length.
    """
    x0, y0 = p0
    x1, y1 = p1
    dx = x1 - x0
    dy = y1 - y0
    t0, t1 = 0.0, 1.0
    for p, q in (
        (-dx, x0 - window.xmin),
        (dx, window.xmax - x0),
        (-dy, y0 - window.ymin),
        (dy, window.ymax - y0),
    ):
        if p == 0.0:
            if q < 0.0:
                return None
            continue
        t = q / p
        if p < 0.0:
            if t > t1:
                return None
            if t > t0:
                t0 = t
        else:
            if t < t0:
                return None
            if t < t1:
                t1 = t
    if t1 - t0 <= 0.0:
        return None
    a = (x0 + t0 * dx, y0 + t0 * dy)
    b = (x0 + t1 * dx, y0 + t1 * dy)
    if math.hypot(b[0] - a[0], b[1] - a[1]) <= MERGE_TOL:
        return None
    return a, b


def segment_intersection(p0, p1, q0, q1, tol: float = MERGE_TOL):
    """Intersection point of two segments, or None.

    Touching endpoints count as intersections.  Collinear overlap of
    positive length is rejected upstream (segment systems forbid it), so
    parallel segments only ever meet at a shared endpoint.
    """
    px, py = p0
    rx, ry = p1[0] - px, p1[1] - py
    qx, qy = q0
    sx, sy = q1[0] - qx, q1[1] - qy
    denom = rx * sy - ry * sx
    qpx, qpy = qx - px, qy - py
    if denom == 0.0:
        # Parallel: accept only a coincident endpoint pair.
        for a in (p0, p1):
            for b in (q0, q1):
                if math.hypot(a[0] - b[0], a[1] - b[1]) <= tol:
                    return a
        return None
    t = (qpx * sy - qpy * sx) / denom
    u = (qpx * ry - qpy * rx) / denom
    # Slack in parameter space so near-endpoint touches survive rounding.
    slack = tol / max(math.hypot(rx, ry), tol)
    slack_u = tol / max(math.hypot(sx, sy), tol)
    if -slack <= t <= 1.0 + slack and -slack_u <= u <= 1.0 + slack_u:
        t = min(max(t, 0.0), 1.0)
        return (px + t * rx, py + t * ry)
    return None


def point_segment_distance(x: float, y: float, a, b) -> float:
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    if L2 == 0.0:
        return math.hypot(x - ax, y - ay)
    t = ((x - ax) * dx + (y - ay) * dy) / L2
    t = min(max(t, 0.0), 1.0)
    return math.hypot(x - (ax + t * dx), y - (ay + t * dy))


class PointMerger:
    """Deterministic point registry merging coincident points.

    Points closer than ``tol`` (absolute, per axis neighborhood check) are
    identified with the first-registered representative.  Insertion order
    fixes which coordinates win, so results are reproducible.
    """

    def __init__(self, tol: float = MERGE_TOL):
        self.tol = tol
        self._cell: dict[tuple[int, int], list[int]] = {}
        self.points: list[tuple[float, float]] = []

    def _key(self, x: float, y: float) -> tuple[int, int]:
        return (int(math.floor(x / self.tol)), int(math.floor(y / self.tol)))

    def add(self, x: float, y: float) -> int:
        kx, ky = self._key(x, y)
        for nx in (kx - 1, kx, kx + 1):
            for ny in (ky - 1, ky, ky + 1):
                for idx in self._cell.get((nx, ny), ()):
                    px, py = self.points[idx]
                    if math.hypot(px - x, py - y) <= self.tol:
                        return idx
        idx = len(self.points)
        self.points.append((x, y))
        self._cell.setdefault((kx, ky), []).append(idx)
        return idx


class SegmentGrid:
    """Uniform grid over segment bounding boxes for candidate-pair pruning."""

    def __init__(self, segments, cell: float):
        self.cell = max(cell, 1e-12)
        self._buckets: dict[tuple[int, int], list[int]] = {}
        for i, (a, b) in enumerate(segments):
            for key in self._keys(a, b):
                self._buckets.setdefault(key, []).append(i)

    def _keys(self, a, b):
        c = self.cell
        ix0 = int(math.floor(min(a[0], b[0]) / c))
        ix1 = int(math.floor(max(a[0], b[0]) / c))
        iy0 = int(math.floor(min(a[1], b[1]) / c))
        iy1 = int(math.floor(max(a[1], b[1]) / c))
        for ix in range(ix0, ix1 + 1):
            for iy in range(iy0, iy1 + 1):
                yield (ix, iy)

    def candidate_pairs(self):
        seen = set()
        for bucket in self._buckets.values():
            n = len(bucket)
            for i in range(n):
                for j in range(i + 1, n):
                    a, b = bucket[i], bucket[j]
                    if a > b:
                        a, b = b, a
                    seen.add((a, b))
        return sorted(seen)


def polyline_length(points) -> float:
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        return 0.0
    return float(np.sum(np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1]))))
