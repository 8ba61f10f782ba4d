"""Deterministic SVG snapshots: streets plus device roles at one instant.

Output is plain string assembly with fixed float formatting, so identical
inputs produce byte-identical files.  Streets are red lines, susceptible
devices blue, infected devices red-filled, white knights green; every file
carries a legend, a scale bar and the scenario hash.
"""

from __future__ import annotations

from . import __version__
from .errors import InvalidParameterError
from .geometry import Window
from .streets import StreetGraph

CANVAS = 720.0
MARGIN = 36.0

STREET_COLOR = "#c23b22"
ROLE_STYLE = {
    "susceptible": ("#2b6cb0", "none"),
    "infected": ("#c23b22", "#c23b22"),
    "knight": ("#2f855a", "#2f855a"),
}


def _fmt(x: float) -> str:
    return "%.6f" % x


class _Mapper:
    def __init__(self, window: Window):
        self.window = window
        self.scale = (CANVAS - 2 * MARGIN) / window.side

    def __call__(self, x: float, y: float) -> tuple[str, str]:
        sx = MARGIN + (x - self.window.xmin) * self.scale
        sy = CANVAS - MARGIN - (y - self.window.ymin) * self.scale
        return _fmt(sx), _fmt(sy)


def render_svg(
    graph: StreetGraph,
    devices=None,
    t: float | None = None,
    scenario_hash: str = "",
    horizon: float | None = None,
) -> str:
    """Render streets and optional device markers to an SVG string.

    ``devices`` is a list of (x, y, role) triples; ``t`` is embedded as the
    frame time and validated against the horizon when one is given.
    """
    if t is not None and horizon is not None and not (0.0 <= t <= horizon):
        raise InvalidParameterError(
            f"render time {t} outside [0, {horizon}]"
        )
    window = graph.window
    to = _Mapper(window)
    parts = []
    parts.append(
        '<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d" '
        'viewBox="0 0 %d %d">' % (int(CANVAS), int(CANVAS), int(CANVAS), int(CANVAS))
    )
    parts.append(
        "<!-- chasescape v%s scenario=%s t=%s -->"
        % (__version__, scenario_hash or "none",
           "none" if t is None else _fmt(t))
    )
    parts.append('<rect width="100%" height="100%" fill="#ffffff"/>')

    # window frame
    x0, y0 = to(window.xmin, window.ymin)
    x1, y1 = to(window.xmax, window.ymax)
    parts.append(
        '<rect x="%s" y="%s" width="%s" height="%s" fill="none" '
        'stroke="#999999" stroke-width="1"/>'
        % (x0, y1, _fmt(float(x1) - float(x0)), _fmt(float(y0) - float(y1)))
    )

    parts.append('<g stroke="%s" stroke-width="1.1" stroke-linecap="round">' % STREET_COLOR)
    for s in graph.streets:
        (ax, ay), (bx, by) = s.geometry
        sx0, sy0 = to(ax, ay)
        sx1, sy1 = to(bx, by)
        parts.append('<line x1="%s" y1="%s" x2="%s" y2="%s"/>' % (sx0, sy0, sx1, sy1))
    parts.append("</g>")

    if devices:
        for role in ("susceptible", "infected", "knight"):
            stroke, fill = ROLE_STYLE[role]
            group = [
                d for d in devices if d[2] == role
                and window.contains(d[0], d[1], tol=window.side)
            ]
            if not group:
                continue
            parts.append(
                '<g stroke="%s" fill="%s" stroke-width="1.2">' % (stroke, fill)
            )
            for x, y, _ in group:
                cx, cy = to(x, y)
                parts.append('<circle cx="%s" cy="%s" r="3"/>' % (cx, cy))
            parts.append("</g>")

    parts.extend(_legend())
    parts.extend(_scale_bar(window))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _legend():
    rows = [
        ("street", STREET_COLOR, STREET_COLOR),
        ("susceptible", *ROLE_STYLE["susceptible"]),
        ("infected", *ROLE_STYLE["infected"]),
        ("knight", *ROLE_STYLE["knight"]),
    ]
    parts = ['<g font-family="monospace" font-size="11">']
    y = 16.0
    for label, stroke, fill in rows:
        parts.append(
            '<circle cx="14" cy="%s" r="4" stroke="%s" fill="%s"/>'
            % (_fmt(y - 3.5), stroke, "none" if fill == "none" else fill)
        )
        parts.append('<text x="24" y="%s" fill="#333333">%s</text>' % (_fmt(y), label))
        y += 14.0
    parts.append("</g>")
    return parts


def _scale_bar(window: Window):
    bar_units = window.side / 5.0
    scale = (CANVAS - 2 * MARGIN) / window.side
    px = bar_units * scale
    x0 = CANVAS - MARGIN - px
    y = CANVAS - 12.0
    return [
        '<g stroke="#333333" stroke-width="2" font-family="monospace" font-size="11">',
        '<line x1="%s" y1="%s" x2="%s" y2="%s"/>' % (_fmt(x0), _fmt(y), _fmt(x0 + px), _fmt(y)),
        '<text x="%s" y="%s" stroke="none" fill="#333333">%s length units</text>'
        % (_fmt(x0), _fmt(y - 6.0), ("%g" % bar_units)),
        "</g>",
    ]


def frame_devices(positions_roles):
    """Normalize an iterable of (x, y, role) into the renderer's format."""
    return [(float(x), float(y), str(role)) for x, y, role in positions_roles]
