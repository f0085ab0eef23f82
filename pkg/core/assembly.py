"""
Global degrees of freedom and Petrov-Galerkin operators on a pipe network

All operators act on "broken" trial vectors (every edge carries its own N*k+1 nodal
coefficients per field) and produce test-space vectors (N*k Legendre moments per edge).
The coupling conditions at the vertices enter either through prolongation matrices
onto the constrained spaces Q_h, V_h (monolithic) or through extra constraint rows
with vertex multipliers (hybrid).
"""

from dataclasses import dataclass
from typing import Callable, Dict, Mapping, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp

from config import DOF_MODES, QUADRATURE_CONFIG
from core.errors import DegreeZero, MeshMismatch, MissingMesh, NegativeFriction, NonpositiveCoefficient
from core.fem import (
    BasisSpec,
    EdgeMesh,
    gauss_rule,
    h1_project,
    legendre_table,
    make_basis,
    test_indices,
    trial_indices,
)
from core.topology import NetworkGraph
from utils.validators import InputValidator, ParameterValidator

FrictionSpec = Union[float, Callable[[np.ndarray], np.ndarray], Mapping[str, object]]
SourceSpec = Union[None, float, Callable[[np.ndarray, float], np.ndarray], Mapping[str, object]]


@dataclass(frozen=True, eq=False)
class DofMap:
    """Numbering of trial unknowns under pressure continuity, Dirichlet slots and flux balance"""
    mode: str
    degree: int
    edges: Tuple[str, ...]
    n_elements: Dict[str, int]
    trial_offsets: Dict[str, int]
    test_offsets: Dict[str, int]
    n_broken: int
    n_test: int
    pressure_prolongation: sp.csr_matrix
    flux_prolongation: sp.csr_matrix
    pressure_pick: np.ndarray
    flux_pick: np.ndarray
    endpoint: Dict[Tuple[str, str], int]
    boundary_slots: Dict[str, int]
    interior_vertices: Tuple[str, ...]
    constraints: sp.csr_matrix
    boundary_rows: Tuple[Tuple[int, str], ...]

    @property
    def dim_pressure(self) -> int:
        return self.pressure_prolongation.shape[1]

    @property
    def dim_flux(self) -> int:
        return self.flux_prolongation.shape[1]

    @property
    def n_multipliers(self) -> int:
        return len(self.interior_vertices)

    @property
    def n_test_total(self) -> int:
        return 2 * self.n_test

    @property
    def n_unknowns(self) -> int:
        if self.mode == DOF_MODES['HYBRID']:
            return 2 * self.n_broken + self.n_multipliers
        return self.dim_pressure + self.dim_flux

    @property
    def is_hybrid(self) -> bool:
        return self.mode == DOF_MODES['HYBRID']

    def prolongation(self) -> sp.csr_matrix:
        """Block prolongation (p, m) constrained -> broken"""
        return sp.block_diag([self.pressure_prolongation, self.flux_prolongation], format='csr')

    def prolong(self, pressure: np.ndarray, flux: np.ndarray, lifting: Optional[np.ndarray] = None) -> np.ndarray:
        broken = np.concatenate([self.pressure_prolongation @ pressure, self.flux_prolongation @ flux])
        if lifting is not None:
            broken = broken + lifting
        return broken

    def restrict(self, broken: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Constrained coordinates of a broken vector that already satisfies the coupling"""
        pressure = broken[:self.n_broken][self.pressure_pick]
        flux = broken[self.n_broken:2 * self.n_broken][self.flux_pick]
        return pressure, flux

    def boundary_lifting(self, values: Mapping[str, float]) -> np.ndarray:
        """Broken (p, m) vector carrying the boundary pressures in the Dirichlet slots"""
        lifting = np.zeros(2 * self.n_broken)
        for vertex, slot in self.boundary_slots.items():
            lifting[slot] = values[vertex]
        return lifting

    def constraint_rhs(self, values: Mapping[str, float]) -> np.ndarray:
        rhs = np.zeros(self.constraints.shape[0])
        for row, vertex in self.boundary_rows:
            rhs[row] = values[vertex]
        return rhs

    def edge_slice(self, edge: str) -> slice:
        start = self.trial_offsets[edge]
        return slice(start, start + self.n_elements[edge] * self.degree + 1)

    def test_slice(self, edge: str) -> slice:
        start = self.test_offsets[edge]
        return slice(start, start + self.n_elements[edge] * self.degree)


def build_dofmap(graph: NetworkGraph, meshes: Mapping[str, EdgeMesh], degree: int,
                 mode: str = DOF_MODES['MONOLITHIC']) -> DofMap:
    """Number the trial unknowns of Q_h and V_h on the network"""
    is_valid, error = ParameterValidator.validate_degree(degree)
    if not is_valid:
        raise DegreeZero(error)
    is_valid, error = InputValidator.validate_choice(mode, list(DOF_MODES.values()))
    if not is_valid:
        raise ValueError(f"Unknown dof mode '{mode}': {error}")

    k = int(degree)
    n_elements, trial_offsets, test_offsets = {}, {}, {}
    n_broken = n_test = 0
    for edge in graph.edges:
        if edge.id not in meshes:
            raise MissingMesh(f"No mesh given for edge {edge.id}")
        mesh = meshes[edge.id]
        if not np.isclose(mesh.length, edge.length, rtol=1e-12, atol=1e-14):
            raise MeshMismatch(f"Mesh of edge {edge.id} ends at {mesh.length}, pipe length is {edge.length}")
        n_elements[edge.id] = mesh.n_elements
        trial_offsets[edge.id] = n_broken
        test_offsets[edge.id] = n_test
        n_broken += mesh.n_elements * k + 1
        n_test += mesh.n_elements * k

    endpoint = {}
    for edge in graph.edges:
        endpoint[(edge.id, edge.tail)] = trial_offsets[edge.id]
        endpoint[(edge.id, edge.head)] = trial_offsets[edge.id] + n_elements[edge.id] * k
    endpoint_vertex = {index: vertex for (_, vertex), index in endpoint.items()}

    # Pressure: shared column per interior vertex, no column at Dirichlet slots
    p_rows, p_cols = [], []
    p_pick = []
    vertex_column: Dict[str, int] = {}
    boundary_slots = {}
    for edge in graph.edges:
        offset = trial_offsets[edge.id]
        for local in range(n_elements[edge.id] * k + 1):
            row = offset + local
            vertex = endpoint_vertex.get(row)
            if vertex is not None and vertex in graph.boundary_vertices:
                boundary_slots[vertex] = row
                continue
            if vertex is not None:
                if vertex not in vertex_column:
                    vertex_column[vertex] = len(p_pick)
                    p_pick.append(row)
                column = vertex_column[vertex]
            else:
                column = len(p_pick)
                p_pick.append(row)
            p_rows.append(row)
            p_cols.append(column)
    pressure_prolongation = sp.csr_matrix(
        (np.ones(len(p_rows)), (np.array(p_rows, dtype=int), np.array(p_cols, dtype=int))),
        shape=(n_broken, len(p_pick))
    )

    # Flux: at each interior vertex the first edge end is eliminated by
    # m^{e1}(v) = -n^{e1}(v) * sum_{i>1} n^{ei}(v) m^{ei}(v)
    eliminated = {}
    for vertex in graph.ordered_interior_vertices():
        star = graph.incident_edges(vertex)
        first_edge, first_sign = star[0]
        eliminated[endpoint[(first_edge, vertex)]] = (vertex, first_sign)
    retained_coupling = {}
    for vertex in graph.ordered_interior_vertices():
        star = graph.incident_edges(vertex)
        first_edge, first_sign = star[0]
        first_row = endpoint[(first_edge, vertex)]
        for edge_id, sign in star[1:]:
            retained_coupling[endpoint[(edge_id, vertex)]] = (first_row, -first_sign * sign)

    m_rows, m_cols, m_data = [], [], []
    m_pick = []
    for row in range(n_broken):
        if row in eliminated:
            continue
        column = len(m_pick)
        m_pick.append(row)
        m_rows.append(row)
        m_cols.append(column)
        m_data.append(1.0)
        if row in retained_coupling:
            first_row, weight = retained_coupling[row]
            m_rows.append(first_row)
            m_cols.append(column)
            m_data.append(weight)
    flux_prolongation = sp.csr_matrix(
        (np.array(m_data), (np.array(m_rows, dtype=int), np.array(m_cols, dtype=int))),
        shape=(n_broken, len(m_pick))
    )

    # Hybrid rows over [p_broken, m_broken, multipliers]
    interior = tuple(graph.ordered_interior_vertices())
    multiplier_column = {v: 2 * n_broken + i for i, v in enumerate(interior)}
    c_rows, c_cols, c_data = [], [], []
    boundary_rows = []
    row = 0
    for vertex in graph.vertices:
        for edge_id, _ in graph.incident_edges(vertex):
            c_rows.append(row)
            c_cols.append(endpoint[(edge_id, vertex)])
            c_data.append(1.0)
            if vertex in graph.interior_vertices:
                c_rows.append(row)
                c_cols.append(multiplier_column[vertex])
                c_data.append(-1.0)
            else:
                boundary_rows.append((row, vertex))
            row += 1
    for vertex in interior:
        for edge_id, sign in graph.incident_edges(vertex):
            c_rows.append(row)
            c_cols.append(n_broken + endpoint[(edge_id, vertex)])
            c_data.append(float(sign))
        row += 1
    constraints = sp.csr_matrix(
        (np.array(c_data), (np.array(c_rows, dtype=int), np.array(c_cols, dtype=int))),
        shape=(row, 2 * n_broken + len(interior))
    )

    return DofMap(
        mode=mode,
        degree=k,
        edges=tuple(edge.id for edge in graph.edges),
        n_elements=n_elements,
        trial_offsets=trial_offsets,
        test_offsets=test_offsets,
        n_broken=n_broken,
        n_test=n_test,
        pressure_prolongation=pressure_prolongation,
        flux_prolongation=flux_prolongation,
        pressure_pick=np.array(p_pick, dtype=int),
        flux_pick=np.array(m_pick, dtype=int),
        endpoint=endpoint,
        boundary_slots=boundary_slots,
        interior_vertices=interior,
        constraints=constraints,
        boundary_rows=tuple(boundary_rows),
    )


def edge_function(spec, edge: str):
    """Resolve a scalar / callable / per-edge mapping to the value for one edge"""
    if isinstance(spec, Mapping):
        if edge in spec:
            return spec[edge]
        return spec.get('default', 0.0)
    return spec


def _friction_coefficients(spec: FrictionSpec, edge: str, mesh: EdgeMesh, basis: BasisSpec) -> np.ndarray:
    """Legendre coefficients (N, k+1) of d on every element, i.e. d stored as P_k per element"""
    value = edge_function(spec, edge)
    n_modes = basis.degree + 1
    coefficients = np.zeros((mesh.n_elements, n_modes))
    if callable(value):
        rule = gauss_rule(max(basis.degree + 2, QUADRATURE_CONFIG['projection_points']))
        x = mesh.physical_points(rule.points)
        samples = np.broadcast_to(np.asarray(value(x), dtype=float), x.shape)
        table = legendre_table(rule.points, n_modes)[0]
        norms = 2.0 / (2.0 * np.arange(n_modes) + 1.0)
        coefficients = (samples * rule.weights[None, :]) @ table / norms[None, :]
    else:
        coefficients[:, 0] = float(value)
    return coefficients


@dataclass(frozen=True, eq=False)
class SemidiscreteSystem:
    """Mass, gradient, projection and friction operators of the Petrov-Galerkin scheme"""
    graph: NetworkGraph
    meshes: Dict[str, EdgeMesh]
    basis: BasisSpec
    dofmap: DofMap
    a: float
    b: float
    mass: sp.csr_matrix
    gradient: sp.csr_matrix
    projection: sp.csr_matrix
    friction: sp.csr_matrix
    test_gram: np.ndarray
    friction_coefficients: Dict[str, np.ndarray]

    @property
    def mass_p(self) -> sp.csr_matrix:
        return (self.a * self.mass).tocsr()

    @property
    def mass_m(self) -> sp.csr_matrix:
        return (self.b * self.mass).tocsr()

    @property
    def gradient_p(self) -> sp.csr_matrix:
        """B_p: flux test rows, pressure trial columns, entries (d/dx q_h, v~_h)"""
        return self.gradient

    @property
    def gradient_m(self) -> sp.csr_matrix:
        """B_m: pressure test rows, flux trial columns, entries (d/dx v_h, q~_h)"""
        return self.gradient

    def block_mass(self, a: Optional[float] = None, b: Optional[float] = None) -> sp.csr_matrix:
        a = self.a if a is None else a
        b = self.b if b is None else b
        return sp.block_diag([a * self.mass, b * self.mass], format='csr')

    def block_stiffness(self) -> sp.csr_matrix:
        return sp.bmat([[None, self.gradient], [self.gradient, self.friction]], format='csr')

    def quadrature(self, n_points: Optional[int] = None):
        if n_points is None:
            n_points = self.basis.degree + QUADRATURE_CONFIG['assembly_extra_points']
        return gauss_rule(n_points)

    def load(self, source: SourceSpec, t: float) -> np.ndarray:
        """Moments (source(x, t), psi_i) on every test function"""
        vector = np.zeros(self.dofmap.n_test)
        if source is None:
            return vector
        rule = self.quadrature()
        psi = self.basis.test(rule.points)
        for edge in self.dofmap.edges:
            value = edge_function(source, edge)
            if value is None:
                continue
            mesh = self.meshes[edge]
            x = mesh.physical_points(rule.points)
            if callable(value):
                samples = np.broadcast_to(np.asarray(value(x, t), dtype=float), x.shape)
            else:
                samples = np.full(x.shape, float(value))
            moments = (samples * rule.weights[None, :]) @ psi * (0.5 * mesh.sizes)[:, None]
            vector[self.dofmap.test_slice(edge)] = moments.ravel()
        return vector

    def projected_norm_squared(self, field: np.ndarray) -> float:
        """||pi_h^{k-1} w_h||^2 for a broken trial vector"""
        coefficients = self.projection @ field
        return float(np.sum(self.test_gram * coefficients ** 2))

    def energy(self, pressure: np.ndarray, flux: np.ndarray) -> float:
        """a ||pi p_h||^2 + b ||pi m_h||^2"""
        return self.a * self.projected_norm_squared(pressure) + self.b * self.projected_norm_squared(flux)


def _scatter(blocks, rows, cols, shape) -> sp.csr_matrix:
    data = np.concatenate([b.ravel() for b in blocks])
    row_index = np.concatenate([r.ravel() for r in rows])
    col_index = np.concatenate([c.ravel() for c in cols])
    return sp.coo_matrix((data, (row_index, col_index)), shape=shape).tocsr()


def assemble(graph: NetworkGraph, meshes: Mapping[str, EdgeMesh], dofmap: DofMap,
             a: float = 1.0, b: float = 1.0, d: FrictionSpec = 1.0) -> SemidiscreteSystem:
    """Assemble the operators of the semidiscrete problem with exact quadrature for polynomial data"""
    for name, value in (('a', a), ('b', b)):
        is_valid, error = ParameterValidator.validate_positive(name, value)
        if not is_valid:
            raise NonpositiveCoefficient(error)

    basis = make_basis(dofmap.degree)
    k = basis.degree
    rule = gauss_rule(k + QUADRATURE_CONFIG['assembly_extra_points'])
    psi = basis.test(rule.points)
    check_points = np.concatenate([[-1.0], rule.points, [1.0]])
    check_table = legendre_table(check_points, k + 1)[0]
    value_table = legendre_table(rule.points, k + 1)[0]

    mass_blocks, grad_blocks, proj_blocks, fric_blocks = [], [], [], []
    row_blocks, col_blocks = [], []
    gram = np.zeros(dofmap.n_test)
    friction_coefficients = {}

    for edge in dofmap.edges:
        mesh = meshes[edge]
        n = mesh.n_elements
        half = 0.5 * mesh.sizes

        coefficients = _friction_coefficients(d, edge, mesh, basis)
        if np.any(coefficients @ check_table.T < -1e-14):
            raise NegativeFriction(f"Friction coefficient is negative on edge {edge}")
        friction_coefficients[edge] = coefficients
        d_values = coefficients @ value_table.T

        weighted = half[:, None] * rule.weights[None, :] * d_values
        weighted_mass = np.einsum('nq,qi,ql->nil', weighted, psi, psi)

        mass_blocks.append(half[:, None, None] * basis.reference_mass[None, :, :])
        grad_blocks.append(np.broadcast_to(basis.reference_gradient, (n, k, k + 1)))
        proj_blocks.append(np.broadcast_to(basis.reference_projection, (n, k, k + 1)))
        fric_blocks.append(weighted_mass @ basis.reference_projection)

        rows = dofmap.test_offsets[edge] + test_indices(n, k)
        cols = dofmap.trial_offsets[edge] + trial_indices(n, k)
        row_blocks.append(np.broadcast_to(rows[:, :, None], (n, k, k + 1)))
        col_blocks.append(np.broadcast_to(cols[:, None, :], (n, k, k + 1)))

        gram[dofmap.test_slice(edge)] = (half[:, None] * basis.test_norms[None, :]).ravel()

    shape = (dofmap.n_test, dofmap.n_broken)
    return SemidiscreteSystem(
        graph=graph,
        meshes=dict(meshes),
        basis=basis,
        dofmap=dofmap,
        a=float(a),
        b=float(b),
        mass=_scatter(mass_blocks, row_blocks, col_blocks, shape),
        gradient=_scatter(grad_blocks, row_blocks, col_blocks, shape),
        projection=_scatter(proj_blocks, row_blocks, col_blocks, shape),
        friction=_scatter(fric_blocks, row_blocks, col_blocks, shape),
        test_gram=gram,
        friction_coefficients=friction_coefficients,
    )


def antisymmetry_defect(system: SemidiscreteSystem, p_coeffs: np.ndarray, m_coeffs: np.ndarray) -> float:
    """(d/dx m_h, pi p_h) + (d/dx p_h, pi m_h) for broken coefficient vectors"""
    projected_p = system.projection @ p_coeffs
    projected_m = system.projection @ m_coeffs
    return float(projected_p @ (system.gradient @ m_coeffs) + projected_m @ (system.gradient @ p_coeffs))


def hybrid_to_monolithic(dofmap: DofMap, hybrid_solution: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Constrained (p, m) coordinates from a hybrid vector [p_broken, m_broken, multipliers]"""
    return dofmap.restrict(np.asarray(hybrid_solution)[:2 * dofmap.n_broken])


def mass_rank(system: SemidiscreteSystem) -> int:
    """Numerical rank of the mass operator restricted to Q_h x V_h (small instances only)"""
    constrained = system.block_mass() @ system.dofmap.prolongation()
    return int(np.linalg.matrix_rank(constrained.toarray()))


def project_state(system: SemidiscreteSystem, pressure, flux) -> np.ndarray:
    """Broken (p, m) vector of I_h^k applied to initial fields given per edge or globally"""
    state = np.zeros(2 * system.dofmap.n_broken)
    for edge in system.dofmap.edges:
        mesh = system.meshes[edge]
        block = system.dofmap.edge_slice(edge)
        for offset, spec in ((0, pressure), (system.dofmap.n_broken, flux)):
            value = edge_function(spec, edge)
            target = slice(block.start + offset, block.stop + offset)
            if callable(value):
                state[target] = h1_project(value, mesh, system.basis)
            else:
                state[target] = float(value)
    return state
