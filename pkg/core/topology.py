"""
Pipe network topology
Directed metric graph with incidence values and interior/boundary vertex classification
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Sequence, Tuple, Union

import networkx as nx
import numpy as np
import scipy.sparse as sp

from config import NETWORK_STUDY
from core.errors import (
    Disconnected,
    EmptyGraph,
    NonpositiveLength,
    ParseError,
    SelfLoop,
    TopologyError,
    UnknownVertex,
)
from utils.validators import NetworkValidator

EdgeTuple = Union[Tuple[str, str, float], Tuple[str, str, str, float]]


@dataclass(frozen=True)
class Edge:
    """A pipe e = (tail, head) identified with the interval [0, length]"""
    id: str
    tail: str
    head: str
    length: float


class NetworkGraph:
    """Immutable directed pipe network with incidence structure"""

    def __init__(self, vertices: Sequence[str], edges: Sequence[Edge]):
        self.vertices: Tuple[str, ...] = tuple(vertices)
        self.edges: Tuple[Edge, ...] = tuple(edges)
        self.vertex_index: Dict[str, int] = {v: i for i, v in enumerate(self.vertices)}
        self.edge_index: Dict[str, int] = {e.id: i for i, e in enumerate(self.edges)}
        self._edges_by_id: Dict[str, Edge] = {e.id: e for e in self.edges}

        # Parallel edges are allowed, hence the multigraph
        self._graph = nx.MultiDiGraph()
        self._graph.add_nodes_from(self.vertices)
        for edge in self.edges:
            self._graph.add_edge(edge.tail, edge.head, key=edge.id, length=edge.length)

        self._star: Dict[str, List[Tuple[str, int]]] = {v: [] for v in self.vertices}
        for edge in self.edges:
            self._star[edge.tail].append((edge.id, -1))
            self._star[edge.head].append((edge.id, +1))

        self.boundary_vertices: FrozenSet[str] = frozenset(
            v for v in self.vertices if len(self._star[v]) == 1
        )
        self.interior_vertices: FrozenSet[str] = frozenset(
            v for v in self.vertices if len(self._star[v]) > 1
        )

    def __repr__(self) -> str:
        return f"NetworkGraph({len(self.vertices)} vertices, {len(self.edges)} edges)"

    @property
    def nx_graph(self) -> nx.MultiDiGraph:
        return self._graph

    def edge(self, edge_id: str) -> Edge:
        return self._edges_by_id[edge_id]

    def ordered_interior_vertices(self) -> List[str]:
        return [v for v in self.vertices if v in self.interior_vertices]

    def ordered_boundary_vertices(self) -> List[str]:
        return [v for v in self.vertices if v in self.boundary_vertices]

    def incidence(self, edge_id: str, vertex: str) -> int:
        """n^e(v): -1 at the tail, +1 at the head, 0 if e does not touch v"""
        edge = self._edges_by_id[edge_id]
        if vertex not in self.vertex_index:
            raise UnknownVertex(f"Unknown vertex: {vertex}")
        if vertex == edge.tail:
            return -1
        if vertex == edge.head:
            return +1
        return 0

    def incident_edges(self, vertex: str) -> List[Tuple[str, int]]:
        """The edge star E(v) with incidence signs, in edge order"""
        if vertex not in self._star:
            raise UnknownVertex(f"Unknown vertex: {vertex}")
        return list(self._star[vertex])

    def incidence_matrix(self) -> sp.csr_matrix:
        """|V| x |E| matrix with entries n^e(v)"""
        rows, cols, data = [], [], []
        for j, edge in enumerate(self.edges):
            rows += [self.vertex_index[edge.tail], self.vertex_index[edge.head]]
            cols += [j, j]
            data += [-1.0, 1.0]
        shape = (len(self.vertices), len(self.edges))
        return sp.csr_matrix((np.array(data), (np.array(rows), np.array(cols))), shape=shape)


def incident_edges(graph: NetworkGraph, vertex: str) -> List[Tuple[str, int]]:
    return graph.incident_edges(vertex)


def _rejected_edge(tail: str, head: str, length) -> type:
    if tail == head:
        return SelfLoop
    if not NetworkValidator.validate_length(length)[0]:
        return NonpositiveLength
    return TopologyError


def build_graph(edge_list: Iterable[EdgeTuple]) -> NetworkGraph:
    """
    Build a network from (tail, head, length) or (edge_id, tail, head, length) tuples.
    Edges without an id are named e1, e2, ... in input order.
    """
    edges: List[Edge] = []
    vertices: List[str] = []
    seen_vertices = set()
    seen_edges = set()

    for position, item in enumerate(edge_list, start=1):
        if len(item) == 3:
            tail, head, length = item
            edge_id = f"e{position}"
        elif len(item) == 4:
            edge_id, tail, head, length = item
        else:
            raise ValueError(f"Edge entry {position} must have 3 or 4 fields, got {len(item)}")

        edge_id, tail, head = str(edge_id), str(tail), str(head)
        is_valid, error = NetworkValidator.validate_edge(tail, head, length)
        if not is_valid:
            raise _rejected_edge(tail, head, length)(f"Edge {edge_id}: {error}")
        if edge_id in seen_edges:
            raise ValueError(f"Duplicate edge id: {edge_id}")
        seen_edges.add(edge_id)

        for vertex in (tail, head):
            if vertex not in seen_vertices:
                seen_vertices.add(vertex)
                vertices.append(vertex)
        edges.append(Edge(edge_id, tail, head, float(length)))

    if not edges:
        raise EmptyGraph("A pipe network needs at least one edge")

    graph = NetworkGraph(vertices, edges)
    if not nx.is_weakly_connected(graph.nx_graph):
        components = nx.number_weakly_connected_components(graph.nx_graph)
        raise Disconnected(f"Pipe network is not connected ({components} components)")

    return graph


def parse_network_text(text: str) -> List[Tuple[str, str, str, float]]:
    """
    Parse the line-oriented network format
    `<edge_id> <tail_id> <head_id> <length>`; `#` starts a comment
    """
    entries = []
    for line_number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split('#', 1)[0]
        if not line.strip():
            continue

        fields = line.split()
        if len(fields) != 4:
            column = len(raw_line) - len(raw_line.lstrip()) + 1
            raise ParseError(
                f"Expected '<edge_id> <tail_id> <head_id> <length>', got {len(fields)} fields",
                line_number, column
            )

        for field in fields[:3]:
            is_valid, error = NetworkValidator.validate_identifier(field)
            if not is_valid:
                raise ParseError(error, line_number, raw_line.find(field) + 1)

        try:
            length = float(fields[3])
        except ValueError:
            raise ParseError(
                f"Invalid pipe length '{fields[3]}'", line_number, raw_line.find(fields[3]) + 1
            ) from None

        entries.append((fields[0], fields[1], fields[2], length))

    return entries


def load_network(path: Union[str, Path]) -> NetworkGraph:
    """Read a network file and build the graph"""
    text = Path(path).read_text(encoding='utf-8')
    return build_graph(parse_network_text(text))


def seven_pipe_network() -> NetworkGraph:
    """The seven-pipe test network with unit lengths"""
    return build_graph(NETWORK_STUDY['edges'])
