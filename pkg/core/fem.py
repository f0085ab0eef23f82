"""
Finite element kernel on a single pipe
Edge meshes, Gauss quadrature, Gauss-Lobatto nodal trial basis, Legendre modal test basis,
and the H1- and L2-projections with the commuting diagram property d/dx I_h = pi_h d/dx
"""

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import legendre

from config import QUADRATURE_CONFIG
from utils.validators import ParameterValidator, ValidationError

Function1D = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Points and weights on the reference element [-1, 1]"""
    points: np.ndarray
    weights: np.ndarray
    degree: int

    @property
    def size(self) -> int:
        return len(self.points)


@lru_cache(maxsize=None)
def gauss_rule(n_points: int) -> QuadratureRule:
    """Gauss-Legendre rule with n points, exact up to degree 2n-1"""
    if isinstance(n_points, bool) or not isinstance(n_points, (int, np.integer)) or n_points < 1:
        raise ValidationError('n_points', str(n_points), "needs at least one quadrature point")
    points, weights = legendre.leggauss(int(n_points))
    points.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(points, weights, 2 * int(n_points) - 1)


@lru_cache(maxsize=None)
def lobatto_nodes(degree: int) -> np.ndarray:
    """
    Gauss-Lobatto nodes on [-1, 1]: the endpoints and the roots of P_k'.
    Newton iteration started from Chebyshev-Gauss-Lobatto points.
    """
    if degree == 1:
        nodes = np.array([-1.0, 1.0])
        nodes.setflags(write=False)
        return nodes

    nodes = -np.cos(np.pi * np.arange(degree + 1) / degree)
    vandermonde = np.zeros((degree + 1, degree + 1))
    for _ in range(100):
        vandermonde[:, 0] = 1.0
        vandermonde[:, 1] = nodes
        for j in range(2, degree + 1):
            vandermonde[:, j] = ((2 * j - 1) * nodes * vandermonde[:, j - 1]
                                 - (j - 1) * vandermonde[:, j - 2]) / j
        update = -(nodes * vandermonde[:, degree] - vandermonde[:, degree - 1]) \
            / ((degree + 1) * vandermonde[:, degree])
        nodes = nodes + update
        if np.max(np.abs(update)) <= np.finfo(np.float64).eps:
            break

    nodes = 0.5 * (nodes - nodes[::-1])
    nodes[0], nodes[-1] = -1.0, 1.0
    nodes.setflags(write=False)
    return nodes


def lagrange_table(nodes: np.ndarray, xi: np.ndarray):
    """Values and derivatives of the Lagrange polynomials on `nodes` at points xi"""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    n = len(nodes)
    values = np.zeros((xi.size, n))
    derivatives = np.zeros((xi.size, n))

    for j in range(n):
        others = [m for m in range(n) if m != j]
        denominator = np.prod([nodes[j] - nodes[m] for m in others])
        values[:, j] = np.prod([xi - nodes[m] for m in others], axis=0) / denominator

        derivative = np.zeros_like(xi)
        for m in others:
            term = np.ones_like(xi)
            for l in others:
                if l != m:
                    term = term * (xi - nodes[l])
            derivative += term
        derivatives[:, j] = derivative / denominator

    return values, derivatives


def legendre_table(xi: np.ndarray, n_modes: int):
    """Values and derivatives of P_0 ... P_{n_modes-1} at points xi"""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    values = legendre.legvander(xi, n_modes - 1)
    identity = np.eye(n_modes)
    derivatives = np.column_stack([
        np.broadcast_to(legendre.legval(xi, legendre.legder(identity[i])), xi.shape)
        for i in range(n_modes)
    ])
    return values, derivatives


@dataclass(frozen=True)
class BasisSpec:
    """
    Trial space: continuous P_k, nodal at Gauss-Lobatto points (k+1 per element).
    Test space: discontinuous P_{k-1}, Legendre modes (k per element).
    """
    degree: int

    def __post_init__(self):
        is_valid, error = ParameterValidator.validate_degree(self.degree)
        if not is_valid:
            raise ValidationError('degree', str(self.degree), error)

    @property
    def trial_dim(self) -> int:
        return self.degree + 1

    @property
    def test_dim(self) -> int:
        return self.degree

    @cached_property
    def nodes(self) -> np.ndarray:
        return lobatto_nodes(self.degree)

    @cached_property
    def test_norms(self) -> np.ndarray:
        """Reference squared norms 2/(2i+1) of the Legendre modes"""
        return 2.0 / (2.0 * np.arange(self.degree) + 1.0)

    def trial(self, xi) -> np.ndarray:
        return lagrange_table(self.nodes, xi)[0]

    def trial_derivative(self, xi) -> np.ndarray:
        return lagrange_table(self.nodes, xi)[1]

    def test(self, xi) -> np.ndarray:
        return legendre_table(xi, self.degree)[0]

    def test_derivative(self, xi) -> np.ndarray:
        return legendre_table(xi, self.degree)[1]

    @cached_property
    def _exact_rule(self) -> QuadratureRule:
        return gauss_rule(self.degree + 1)

    @cached_property
    def reference_mass(self) -> np.ndarray:
        """int psi_i phi_j over [-1, 1], shape (k, k+1)"""
        rule = self._exact_rule
        return np.einsum('q,qi,qj->ij', rule.weights, self.test(rule.points), self.trial(rule.points))

    @cached_property
    def reference_gradient(self) -> np.ndarray:
        """int psi_i phi_j' over [-1, 1], shape (k, k+1); equals the physical integral"""
        rule = self._exact_rule
        return np.einsum('q,qi,qj->ij', rule.weights, self.test(rule.points),
                         self.trial_derivative(rule.points))

    @cached_property
    def reference_projection(self) -> np.ndarray:
        """Legendre coefficients of pi_h^{k-1} phi_j, shape (k, k+1)"""
        return self.reference_mass / self.test_norms[:, None]


@lru_cache(maxsize=None)
def make_basis(degree: int) -> BasisSpec:
    return BasisSpec(degree)


@dataclass(frozen=True, eq=False)
class EdgeMesh:
    """Partition 0 = x_0 < x_1 < ... < x_N = l^e of one pipe"""
    edge: str
    breakpoints: np.ndarray

    def __post_init__(self):
        breakpoints = np.array(self.breakpoints, dtype=float)
        is_valid, error = ParameterValidator.validate_breakpoints(
            list(breakpoints), breakpoints[-1] if breakpoints.size else 0.0
        )
        if not is_valid:
            raise ValidationError('breakpoints', self.edge, error)
        breakpoints.setflags(write=False)
        object.__setattr__(self, 'breakpoints', breakpoints)

    @property
    def n_elements(self) -> int:
        return len(self.breakpoints) - 1

    @property
    def length(self) -> float:
        return float(self.breakpoints[-1])

    @cached_property
    def sizes(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    @property
    def h(self) -> float:
        return float(np.max(self.sizes))

    def physical_points(self, xi: np.ndarray) -> np.ndarray:
        """Map reference points to every element, shape (N, len(xi))"""
        xi = np.asarray(xi, dtype=float)
        return self.breakpoints[:-1, None] + 0.5 * (xi[None, :] + 1.0) * self.sizes[:, None]

    def locate(self, x: np.ndarray):
        """Element index and reference coordinate of physical points"""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        element = np.searchsorted(self.breakpoints, x, side='right') - 1
        element = np.clip(element, 0, self.n_elements - 1)
        xi = 2.0 * (x - self.breakpoints[element]) / self.sizes[element] - 1.0
        return element, xi

    def is_refinement_of(self, coarse: "EdgeMesh", tol: float = 1e-12) -> bool:
        if not np.isclose(self.length, coarse.length, rtol=tol, atol=tol):
            return False
        positions = np.searchsorted(self.breakpoints, coarse.breakpoints - tol)
        positions = np.clip(positions, 0, len(self.breakpoints) - 1)
        return bool(np.all(np.abs(self.breakpoints[positions] - coarse.breakpoints) <= tol * max(1.0, self.length)))


def uniform_mesh(edge: str, length: float, n_elements: int) -> EdgeMesh:
    if n_elements < 1:
        raise ValidationError('n_elements', str(n_elements), "needs at least one element")
    return EdgeMesh(edge, np.linspace(0.0, float(length), int(n_elements) + 1))


def mesh_for_size(edge: str, length: float, h: float) -> EdgeMesh:
    """Uniform mesh with element size as close to h as possible (at most h)"""
    n_elements = max(1, int(np.ceil(length / h - 1e-9)))
    return uniform_mesh(edge, length, n_elements)


def refine(mesh: EdgeMesh) -> EdgeMesh:
    """Uniform bisection of every element"""
    midpoints = 0.5 * (mesh.breakpoints[:-1] + mesh.breakpoints[1:])
    breakpoints = np.empty(2 * mesh.n_elements + 1)
    breakpoints[0::2] = mesh.breakpoints
    breakpoints[1::2] = midpoints
    return EdgeMesh(mesh.edge, breakpoints)


# Coefficient layouts: trial dof (n, j) -> n*k + j on an edge (N*k + 1 total),
# test dof (n, i) -> n*k + i (N*k total).

def trial_indices(n_elements: int, degree: int) -> np.ndarray:
    return np.arange(n_elements)[:, None] * degree + np.arange(degree + 1)[None, :]


def test_indices(n_elements: int, degree: int) -> np.ndarray:
    return np.arange(n_elements)[:, None] * degree + np.arange(degree)[None, :]


def _sample(function: Function1D, x: np.ndarray) -> np.ndarray:
    return np.broadcast_to(np.asarray(function(x), dtype=float), np.shape(x))


def _rule_for(basis: BasisSpec, n_points: Optional[int], extra_key: str) -> QuadratureRule:
    if n_points is None:
        n_points = basis.degree + QUADRATURE_CONFIG[extra_key]
    return gauss_rule(n_points)


def _projection_rule(basis: BasisSpec, n_points: Optional[int]) -> QuadratureRule:
    if n_points is None:
        n_points = max(basis.degree + 2, QUADRATURE_CONFIG['projection_points'])
    return gauss_rule(n_points)


def trial_at_points(coeffs: np.ndarray, mesh: EdgeMesh, basis: BasisSpec, xi: np.ndarray) -> np.ndarray:
    """Trial function values at reference points of every element, shape (N, len(xi))"""
    element_coeffs = np.asarray(coeffs)[trial_indices(mesh.n_elements, basis.degree)]
    return element_coeffs @ basis.trial(xi).T


def test_at_points(coeffs: np.ndarray, mesh: EdgeMesh, basis: BasisSpec, xi: np.ndarray) -> np.ndarray:
    element_coeffs = np.asarray(coeffs)[test_indices(mesh.n_elements, basis.degree)]
    return element_coeffs @ basis.test(xi).T


def evaluate(coeffs: np.ndarray, mesh: EdgeMesh, basis: BasisSpec, x: np.ndarray) -> np.ndarray:
    """Evaluate a trial function given by its edge coefficients at physical points"""
    element, xi = mesh.locate(x)
    table = lagrange_table(basis.nodes, xi)[0]
    idx = element[:, None] * basis.degree + np.arange(basis.degree + 1)[None, :]
    return np.sum(table * np.asarray(coeffs)[idx], axis=1)


def l2_project(v: Function1D, mesh: EdgeMesh, basis: BasisSpec,
               n_points: Optional[int] = None) -> np.ndarray:
    """Legendre coefficients of pi_h^{k-1} v, elementwise"""
    rule = _projection_rule(basis, n_points)
    values = _sample(v, mesh.physical_points(rule.points))
    moments = (values * rule.weights[None, :]) @ basis.test(rule.points)
    return (moments / basis.test_norms[None, :]).ravel()


def h1_project(v: Function1D, mesh: EdgeMesh, basis: BasisSpec,
               dv: Optional[Function1D] = None, n_points: Optional[int] = None) -> np.ndarray:
    """
    Trial coefficients of I_h^k v: interpolation at the breakpoints and
    (d/dx I_h v, psi) = (d/dx v, psi) for all P_{k-1} test functions.
    Without dv the derivative moments are obtained by integration by parts.
    """
    k = basis.degree
    n_elements = mesh.n_elements
    coeffs = np.zeros(n_elements * k + 1)
    coeffs[::k] = _sample(v, mesh.breakpoints)
    if k == 1:
        return coeffs

    rule = _projection_rule(basis, n_points)
    x = mesh.physical_points(rule.points)
    psi = basis.test(rule.points)
    if dv is not None:
        moments = (_sample(dv, x) * rule.weights[None, :]) @ psi * (0.5 * mesh.sizes)[:, None]
    else:
        signs = (-1.0) ** np.arange(k)
        moments = (coeffs[k::k, None] - coeffs[:-1:k, None] * signs[None, :]
                   - (_sample(v, x) * rule.weights[None, :]) @ basis.test_derivative(rule.points))

    gradient = basis.reference_gradient
    inner = gradient[1:, 1:k]
    ends = gradient[1:, [0, k]]
    end_values = np.column_stack([coeffs[:-1:k], coeffs[k::k]])
    rhs = moments[:, 1:] - end_values @ ends.T
    interior = np.linalg.solve(inner, rhs.T).T

    idx = np.arange(n_elements)[:, None] * k + np.arange(1, k)[None, :]
    coeffs[idx] = interior
    return coeffs


def l2_norm(function: Function1D, mesh: EdgeMesh, n_points: int) -> float:
    """L2 norm on one edge by Gauss quadrature"""
    rule = gauss_rule(n_points)
    values = _sample(function, mesh.physical_points(rule.points))
    return float(np.sqrt(np.sum((values ** 2 * rule.weights[None, :]) * (0.5 * mesh.sizes)[:, None])))


def projection_error(v: Function1D, mesh: EdgeMesh, basis: BasisSpec, which: str = 'H1',
                     n_points: Optional[int] = None) -> float:
    """||v - I_h^k v|| (which='H1') or ||v - pi_h^{k-1} v|| (which='L2')"""
    rule = _rule_for(basis, n_points, 'error_extra_points')
    x = mesh.physical_points(rule.points)
    exact = _sample(v, x)

    which = which.upper()
    if which == 'H1':
        approx = trial_at_points(h1_project(v, mesh, basis), mesh, basis, rule.points)
    elif which == 'L2':
        approx = test_at_points(l2_project(v, mesh, basis), mesh, basis, rule.points)
    else:
        raise ValidationError('which', which, "must be 'H1' or 'L2'")

    squared = np.sum(((exact - approx) ** 2 * rule.weights[None, :]) * (0.5 * mesh.sizes)[:, None])
    return float(np.sqrt(squared))
