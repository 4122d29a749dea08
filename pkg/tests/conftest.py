import numpy as np
import pytest

from matsketch.ensemble import BipartiteGraph


@pytest.fixture
def hand_graph():
    """3 left / 2 right graph with edges (1-based) {1-1, 1-2, 2-1, 2-1, 3-2, 3-2}."""
    return BipartiteGraph(
        p=3, m=2, delta=2, edges=np.array([[0, 1], [0, 0], [1, 1]])
    )
