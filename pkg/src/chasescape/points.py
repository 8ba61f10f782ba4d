"""Device and white-knight positions: Cox sampling on streets, rooting.

Devices are a Poisson process on the street system with a per-unit-length
intensity: conditional on the streets, each street carries an independent
Poisson(intensity * length) number of devices at uniform offsets.  Rooting
picks the susceptible device nearest the window center as the initially
infected one and re-centers all coordinates on it, which is the finite
window stand-in for observing the process from a typical device.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidParameterError, ResampleSignal
from .geometry import Window
from .streets import StreetGraph, StreetPoint

ROLE_SUSCEPTIBLE = "susceptible"
ROLE_KNIGHT = "knight"

# Fraction of the window side used for the rooting region; rooting near
# the center keeps the root's neighborhood free of clipping artifacts.
INNER_WINDOW_FRACTION = 0.5


def sample_cox(graph: StreetGraph, intensity: float, rng) -> list[StreetPoint]:
    """Sample street points with the given per-length intensity.

    Counts on distinct streets are independent Poisson variables, offsets
    uniform; an intensity of zero returns the empty list.
    """
    if intensity < 0.0:
        raise InvalidParameterError(f"intensity must be >= 0, got {intensity}")
    points: list[StreetPoint] = []
    if intensity == 0.0:
        return points
    for s in graph.streets:
        n = int(rng.poisson(intensity * s.length))
        if n == 0:
            continue
        offsets = rng.uniform(0.0, s.length, size=n)
        points.extend(StreetPoint(s.index, float(o)) for o in offsets)
    return points


@dataclass(frozen=True)
class Device:
    id: int
    point: StreetPoint
    role: str  # ROLE_SUSCEPTIBLE | ROLE_KNIGHT

    def position(self, graph: StreetGraph) -> tuple[float, float]:
        return graph.point_at(self.point)


@dataclass
class PointConfig:
    """A sampled population bound to its street graph."""

    graph: StreetGraph
    devices: list[Device]
    lam: float
    lam_knight: float
    root_id: int | None = None
    translation: tuple[float, float] = (0.0, 0.0)
    meta: dict = field(default_factory=dict)

    def positions(self) -> np.ndarray:
        """Initial plane positions, one row per device.

        A rooted configuration returns the pre-rooting positions shifted by
        the translation in a single vectorized subtraction, so the shift is
        applied exactly (the re-derived street geometry agrees to fp
        precision)."""
        exact = self.meta.get("_positions_exact")
        if exact is not None:
            return exact.copy()
        return np.array(
            [d.position(self.graph) for d in self.devices], dtype=float
        ).reshape(-1, 2)

    def by_role(self, role: str) -> list[Device]:
        return [d for d in self.devices if d.role == role]

    def device(self, device_id: int) -> Device:
        return self.devices[device_id]

    def roles(self) -> dict[int, str]:
        return {d.id: d.role for d in self.devices}

    def dump_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "role", "street_id", "offset", "x", "y"])
            for d in self.devices:
                x, y = d.position(self.graph)
                writer.writerow(
                    [d.id, d.role, d.point.street_id,
                     "%.17g" % d.point.offset, "%.17g" % x, "%.17g" % y]
                )


def assemble_config(
    graph: StreetGraph,
    device_points: list[StreetPoint],
    knight_points: list[StreetPoint],
    lam: float,
    lam_knight: float,
) -> PointConfig:
    """Number devices before knights so ids are stable per role block."""
    devices = [
        Device(i, p, ROLE_SUSCEPTIBLE) for i, p in enumerate(device_points)
    ]
    offset = len(devices)
    devices.extend(
        Device(offset + i, p, ROLE_KNIGHT) for i, p in enumerate(knight_points)
    )
    return PointConfig(graph, devices, lam, lam_knight)


def root_typical(config: PointConfig, window: Window | None = None) -> PointConfig:
    """Choose the susceptible device nearest the window center as root and
    translate everything so it sits at the origin.

    Raises ResampleSignal when no susceptible device lies in the central
    part of the window (the caller should redraw the realization).  Among
    equidistant candidates the lower id wins.
    """
    if window is None:
        window = config.graph.window
    inner = window.shrunk(INNER_WINDOW_FRACTION)
    cx, cy = window.center
    best = None
    for d in config.devices:
        if d.role != ROLE_SUSCEPTIBLE:
            continue
        x, y = d.position(config.graph)
        if not inner.contains(x, y):
            continue
        dist = math.hypot(x - cx, y - cy)
        if best is None or dist < best[0]:
            best = (dist, d.id, x, y)
    if best is None:
        raise ResampleSignal("no susceptible device in the inner window")
    _, root_id, rx, ry = best
    before = config.positions()
    graph = config.graph.translate(-rx, -ry)
    devices = [replace(d) for d in config.devices]
    meta = dict(config.meta, rooted=True)
    meta["_positions_exact"] = before - np.array([rx, ry])
    return PointConfig(
        graph,
        devices,
        config.lam,
        config.lam_knight,
        root_id=root_id,
        translation=(-rx, -ry),
        meta=meta,
    )
