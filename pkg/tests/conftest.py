import numpy as np
import pytest

from chasescape import SegmentSystem, Window, build_graph


def graph_from_segments(segments, side=20.0):
    return build_graph(SegmentSystem(list(segments), Window.centered(side)))


@pytest.fixture
def h_graph():
    """Two verticals of length 4 joined by a rung of length 2 at mid-height."""
    return graph_from_segments([
        ((0.0, 0.0), (0.0, 4.0)),
        ((2.0, 0.0), (2.0, 4.0)),
        ((0.0, 2.0), (2.0, 2.0)),
    ])


@pytest.fixture
def square_graph():
    """Unit square: four streets, four crossings."""
    return graph_from_segments([
        ((0.0, 0.0), (1.0, 0.0)),
        ((1.0, 0.0), (1.0, 1.0)),
        ((1.0, 1.0), (0.0, 1.0)),
        ((0.0, 1.0), (0.0, 0.0)),
    ])


@pytest.fixture
def cross_graph():
    """Two unit-length segments crossing at the origin (four half-arms)."""
    return graph_from_segments([
        ((-0.5, 0.0), (0.5, 0.0)),
        ((0.0, -0.5), (0.0, 0.5)),
    ])


@pytest.fixture
def straight_graph():
    """One street of length 10 on the x axis."""
    return graph_from_segments([((0.0, 0.0), (10.0, 0.0))], side=30.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
