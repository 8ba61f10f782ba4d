import math

import numpy as np
import pytest

from chasescape import (
    InvalidParameterError,
    ResampleSignal,
    SegmentSystem,
    Window,
    build_graph,
    root_typical,
    sample_cox,
)
from chasescape.points import ROLE_KNIGHT, ROLE_SUSCEPTIBLE, assemble_config

SEED = 515


def _hundred_graph():
    """One straight street of total length 100."""
    return build_graph(SegmentSystem(
        [((0.0, 0.0), (100.0, 0.0))], Window.centered(220.0)
    ))


def test_zero_intensity_is_empty(straight_graph, rng):
    assert sample_cox(straight_graph, 0.0, rng) == []
    with pytest.raises(InvalidParameterError):
        sample_cox(straight_graph, -1.0, rng)


def test_counts_match_poisson_moments():
    graph = _hundred_graph()
    rng = np.random.default_rng(SEED)
    counts = np.array([len(sample_cox(graph, 1.0, rng)) for _ in range(1000)])
    # mean of 1000 Poisson(100) draws: 100 +- 3 * sqrt(100/1000)
    assert abs(counts.mean() - 100.0) <= 1.0
    assert 0.9 <= counts.var(ddof=1) / counts.mean() <= 1.1


def test_sampled_points_lie_on_streets(rng):
    graph = _hundred_graph()
    for p in sample_cox(graph, 0.5, rng):
        street = graph.streets[p.street_id]
        assert 0.0 <= p.offset <= street.length
        graph.point_at(p)  # must not raise


def test_counts_on_disjoint_streets_are_uncorrelated():
    graph = build_graph(SegmentSystem(
        [((0.0, 0.0), (10.0, 0.0)), ((0.0, 5.0), (10.0, 5.0))],
        Window.centered(30.0),
    ))
    rng = np.random.default_rng(SEED)
    a, b = [], []
    for _ in range(2000):
        pts = sample_cox(graph, 1.0, rng)
        a.append(sum(1 for p in pts if p.street_id == 0))
        b.append(sum(1 for p in pts if p.street_id == 1))
    corr = np.corrcoef(a, b)[0, 1]
    assert abs(corr) < 0.05


def test_superposition_matches_single_draw():
    graph = _hundred_graph()
    rng = np.random.default_rng(SEED)
    combined = np.array(
        [len(sample_cox(graph, 1.5, rng)) for _ in range(1500)]
    )
    union = np.array([
        len(sample_cox(graph, 1.0, rng)) + len(sample_cox(graph, 0.5, rng))
        for _ in range(1500)
    ])
    # both are Poisson(150); compare first two moments
    assert abs(combined.mean() - union.mean()) <= 3.0 * math.sqrt(150.0 / 1500) * 2
    assert abs(combined.var(ddof=1) / union.var(ddof=1) - 1.0) <= 0.2


def test_rooting_translates_chosen_device_to_origin():
    graph = build_graph(SegmentSystem(
        [((3.0, 4.0), (5.0, 4.0))], Window.centered(20.0, center=(4.0, 4.0))
    ))
    from chasescape import StreetPoint

    config = assemble_config(graph, [StreetPoint(0, 0.0)], [], 1.0, 0.0)
    rooted = root_typical(config)
    assert rooted.root_id == 0
    x, y = rooted.devices[0].position(rooted.graph)
    assert math.isclose(x, 0.0, abs_tol=1e-12)
    assert math.isclose(y, 0.0, abs_tol=1e-12)


def test_rooting_preserves_pairwise_distances(rng):
    graph = _hundred_graph()
    pts = sample_cox(graph, 0.3, rng)
    if len(pts) < 3:
        pts = sample_cox(graph, 1.0, rng)
    config = assemble_config(graph, pts, [], 0.3, 0.0)
    rooted = root_typical(config)
    before = config.positions()
    after = rooted.positions()
    # the shift itself is applied exactly (single vectorized subtraction) ...
    assert np.array_equal(after, before - np.array(rooted.translation) * -1.0)
    # ... so pairwise distances survive at fp precision
    d_before = np.hypot(*(before[:, None, :] - before[None, :, :]).transpose(2, 0, 1))
    d_after = np.hypot(*(after[:, None, :] - after[None, :, :]).transpose(2, 0, 1))
    assert np.allclose(d_before, d_after, rtol=1e-12, atol=1e-12)


def test_rooting_tie_prefers_lower_id():
    graph = build_graph(SegmentSystem(
        [((-2.0, 0.0), (2.0, 0.0))], Window.centered(10.0)
    ))
    from chasescape import StreetPoint

    # both devices at distance 1 from the center
    config = assemble_config(
        graph, [StreetPoint(0, 1.0), StreetPoint(0, 3.0)], [], 1.0, 0.0
    )
    rooted = root_typical(config)
    assert rooted.root_id == 0


def test_rooting_without_central_susceptible_raises():
    graph = _hundred_graph()
    config = assemble_config(graph, [], [], 0.0, 0.0)
    with pytest.raises(ResampleSignal):
        root_typical(config)
    # knights alone cannot root either
    from chasescape import StreetPoint

    config2 = assemble_config(graph, [], [StreetPoint(0, 50.0)], 0.0, 1.0)
    with pytest.raises(ResampleSignal):
        root_typical(config2)


def test_csv_dump_layout(tmp_path, rng):
    graph = _hundred_graph()
    config = assemble_config(
        graph, sample_cox(graph, 0.2, rng), sample_cox(graph, 0.1, rng),
        0.2, 0.1,
    )
    out = tmp_path / "points.csv"
    config.dump_csv(out)
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "id,role,street_id,offset,x,y"
    assert len(lines) == 1 + len(config.devices)
    roles = {line.split(",")[1] for line in lines[1:]}
    assert roles <= {ROLE_SUSCEPTIBLE, ROLE_KNIGHT}
