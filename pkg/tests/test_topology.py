import numpy as np
import pytest

from core.errors import (
    Disconnected,
    EmptyGraph,
    NonpositiveLength,
    ParseError,
    SelfLoop,
    TopologyError,
    UnknownVertex,
)
from core.topology import build_graph, load_network, parse_network_text


def test_seven_pipe_counts(seven_pipes):
    assert len(seven_pipes.vertices) == 6
    assert len(seven_pipes.edges) == 7
    assert seven_pipes.boundary_vertices == {'v1', 'v6'}
    assert seven_pipes.interior_vertices == {'v2', 'v3', 'v4', 'v5'}


def test_incidence_signs(seven_pipes):
    assert seven_pipes.incidence('e1', 'v1') == -1
    assert seven_pipes.incidence('e1', 'v2') == +1
    assert seven_pipes.incidence('e1', 'v5') == 0
    with pytest.raises(UnknownVertex):
        seven_pipes.incidence('e1', 'v9')


def test_star_is_in_edge_order(seven_pipes):
    assert seven_pipes.incident_edges('v3') == [('e2', +1), ('e4', -1), ('e5', -1)]
    with pytest.raises(UnknownVertex):
        seven_pipes.incident_edges('nowhere')


def test_incidence_matrix_columns_sum_to_zero(seven_pipes):
    matrix = seven_pipes.incidence_matrix().toarray()
    assert matrix.shape == (6, 7)
    np.testing.assert_array_equal(matrix.sum(axis=0), np.zeros(7))
    assert matrix[seven_pipes.vertex_index['v3'], seven_pipes.edge_index['e4']] == -1


def test_edges_without_ids_are_numbered():
    graph = build_graph([('a', 'b', 2.0), ('b', 'c', 1.0)])
    assert [edge.id for edge in graph.edges] == ['e1', 'e2']
    assert graph.edge('e1').length == 2.0


def test_parallel_edges_are_kept():
    graph = build_graph([('p', 'a', 'b', 1.0), ('q', 'a', 'b', 0.5)])
    assert len(graph.edges) == 2
    assert graph.interior_vertices == {'a', 'b'}
    assert graph.boundary_vertices == frozenset()


@pytest.mark.parametrize("edges, error", [
    ([], EmptyGraph),
    ([('e1', 'a', 'a', 1.0)], SelfLoop),
    ([('e1', 'a', 'b', 0.0)], NonpositiveLength),
    ([('e1', 'a', 'b', -1.0)], NonpositiveLength),
    ([('e1', 'a', 'b', 1.0), ('e2', 'c', 'd', 1.0)], Disconnected),
])
def test_invalid_networks(edges, error):
    with pytest.raises(error):
        build_graph(edges)


def test_vertex_ids_are_validated():
    with pytest.raises(TopologyError, match="invalid characters"):
        build_graph([('e1', 'v 1', 'v2', 1.0)])


def test_parse_network_text_skips_comments():
    text = "# seven pipes\ne1 v1 v2 1.0\n\n   e2 v2 v3 0.5  # trailing\n"
    assert parse_network_text(text) == [('e1', 'v1', 'v2', 1.0), ('e2', 'v2', 'v3', 0.5)]


def test_parse_network_text_reports_position():
    with pytest.raises(ParseError) as info:
        parse_network_text("e1 v1 v2 1.0\ne2 v2 v3 long\n")
    assert info.value.line == 2
    assert info.value.column == 10

    with pytest.raises(ParseError) as info:
        parse_network_text("e1 v1 v2\n")
    assert info.value.line == 1


def test_load_network(tmp_path):
    path = tmp_path / "net.txt"
    path.write_text("e1 v1 v2 1\ne2 v2 v3 2\n", encoding='utf-8')
    graph = load_network(path)
    assert graph.ordered_boundary_vertices() == ['v1', 'v3']
    assert graph.ordered_interior_vertices() == ['v2']
