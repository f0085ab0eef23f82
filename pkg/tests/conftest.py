"""
Shared pytest fixtures: the seven-pipe network, a single pipe and a three-edge junction
"""

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from core.fem import uniform_mesh
from core.topology import build_graph, seven_pipe_network


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running convergence studies")


@pytest.fixture
def seven_pipes():
    return seven_pipe_network()


@pytest.fixture
def single_pipe():
    return build_graph([('e1', 'v1', 'v2', 1.0)])


@pytest.fixture
def junction():
    """Three pipes meeting at v2, boundary vertices v1, v3, v4"""
    return build_graph([
        ('e1', 'v1', 'v2', 1.0),
        ('e2', 'v2', 'v3', 0.5),
        ('e3', 'v4', 'v2', 0.75),
    ])


@pytest.fixture
def meshes_for():
    def make(graph, n_elements):
        return {edge.id: uniform_mesh(edge.id, edge.length, n_elements) for edge in graph.edges}
    return make


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
