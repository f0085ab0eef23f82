"""
Gas transport models on the Petrov-Galerkin skeleton

linear:       a dt p + dx m = f,        b dt m + dx p + d m = g
semilinear:   A dt rho + dx m = f,      dt m + A dx p(rho) + beta |m| m / (A rho) = g
quasilinear:  semilinear plus the convective flux dx(m^2 / (A rho)) in the momentum balance

with p = c^2 rho and beta = lambda / (2 D). The friction argument is always pi_h^{k-1} m_h.
"""

from dataclasses import dataclass, replace
from typing import Dict, Mapping, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from config import MODEL_KINDS, SCENARIO_DEFAULTS
from core.assembly import (
    DofMap,
    FrictionSpec,
    SemidiscreteSystem,
    SourceSpec,
    assemble,
)
from core.errors import NonpositiveCoefficient, NonpositiveDensity, VacuumState
from core.fem import EdgeMesh, test_indices, trial_indices
from core.topology import NetworkGraph
from utils.validators import InputValidator, ParameterValidator


@dataclass(frozen=True)
class ModelParams:
    """Coefficients of one of the three model kinds"""
    kind: str = SCENARIO_DEFAULTS['kind']
    a: float = SCENARIO_DEFAULTS['a']
    b: float = SCENARIO_DEFAULTS['b']
    d: FrictionSpec = SCENARIO_DEFAULTS['d']
    area: float = SCENARIO_DEFAULTS['area']
    diameter: float = SCENARIO_DEFAULTS['diameter']
    friction_factor: float = SCENARIO_DEFAULTS['friction_factor']
    sound_speed: float = SCENARIO_DEFAULTS['sound_speed']
    f: SourceSpec = None
    g: SourceSpec = None
    # the quasilinear kind without its convective term reduces to the semilinear one
    convection: bool = True

    def __post_init__(self):
        is_valid, error = InputValidator.validate_choice(self.kind, list(MODEL_KINDS.values()))
        if not is_valid:
            raise ValueError(f"Unknown model kind '{self.kind}': {error}")
        object.__setattr__(self, 'kind', self.kind.strip().lower())

        positive = [('a', self.a), ('b', self.b)]
        if self.is_nonlinear:
            positive += [('A', self.area), ('D', self.diameter), ('c', self.sound_speed)]
        for name, value in positive:
            is_valid, error = ParameterValidator.validate_positive(name, value)
            if not is_valid:
                raise NonpositiveCoefficient(error)

        if self.is_nonlinear:
            is_valid, error = ParameterValidator.validate_nonnegative('lambda', self.friction_factor)
            if not is_valid:
                raise NonpositiveCoefficient(error)

    @property
    def is_nonlinear(self) -> bool:
        return self.kind != MODEL_KINDS['LINEAR']

    @property
    def has_convection(self) -> bool:
        return self.convection and self.kind == MODEL_KINDS['QUASILINEAR']

    @property
    def friction_ratio(self) -> float:
        """beta = lambda / (2 D)"""
        return self.friction_factor / (2.0 * self.diameter)

    def with_kind(self, kind: str) -> "ModelParams":
        return replace(self, kind=kind)


def pressure_law(rho, sound_speed: float = 1.0):
    """p = c^2 rho"""
    rho_array = np.asarray(rho, dtype=float)
    if np.any(rho_array <= 0.0):
        raise NonpositiveDensity(f"Density must be positive, got min {np.min(rho_array)}")
    pressure = sound_speed ** 2 * rho_array
    return float(pressure) if np.ndim(pressure) == 0 else pressure


def density(pressure, sound_speed: float = 1.0):
    """rho = p / c^2, inverse of the pressure law"""
    p_array = np.asarray(pressure, dtype=float)
    if np.any(p_array <= 0.0):
        raise NonpositiveDensity(f"Pressure must be positive to define a density, got min {np.min(p_array)}")
    rho = p_array / sound_speed ** 2
    return float(rho) if np.ndim(rho) == 0 else rho


def effective_friction(params: ModelParams, m, rho):
    """Linear friction coefficient d = beta |m| / (A rho) matching semilinear friction at (rho, m)"""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0.0):
        raise NonpositiveDensity("Effective friction needs a positive density")
    d = params.friction_ratio * np.abs(np.asarray(m, dtype=float)) / (params.area * rho)
    return float(d) if np.ndim(d) == 0 else d


def build_system(graph: NetworkGraph, meshes: Mapping[str, EdgeMesh], dofmap: DofMap,
                 params: ModelParams) -> SemidiscreteSystem:
    """Linear kind weights the mass blocks with (a, b); nonlinear kinds with (A, 1) and carry friction in the residual"""
    if params.is_nonlinear:
        return assemble(graph, meshes, dofmap, a=params.area, b=1.0, d=0.0)
    return assemble(graph, meshes, dofmap, a=params.a, b=params.b, d=params.d)


class GasModel:
    """Residual and Jacobian of the semidiscrete operator S(y, t) for y = [p or rho; m] (broken)"""

    def __init__(self, graph: NetworkGraph, meshes: Mapping[str, EdgeMesh], dofmap: DofMap,
                 params: ModelParams, system: Optional[SemidiscreteSystem] = None):
        self.graph = graph
        self.dofmap = dofmap
        self.params = params
        self.system = system if system is not None else build_system(graph, meshes, dofmap, params)

        basis = self.system.basis
        self._rule = self.system.quadrature()
        points = self._rule.points
        self._phi = basis.trial(points)
        self._dphi = basis.trial_derivative(points)
        self._psi = basis.test(points)
        self._pi_phi = self._psi @ basis.reference_projection

        n_broken = dofmap.n_broken
        k = dofmap.degree
        self._edge_tables = []
        for edge in dofmap.edges:
            mesh = self.system.meshes[edge]
            n = mesh.n_elements
            self._edge_tables.append((
                edge,
                dofmap.trial_offsets[edge] + trial_indices(n, k),
                dofmap.test_offsets[edge] + test_indices(n, k),
                0.5 * mesh.sizes,
            ))

        self._mass = self.system.block_mass()
        gradient = self.system.gradient
        if params.is_nonlinear:
            coupling = params.area * params.sound_speed ** 2 * gradient
            self._linear_part = sp.bmat([[None, gradient], [coupling, None]], format='csr')
        else:
            self._linear_part = self.system.block_stiffness()
        self._n_state = 2 * n_broken

    @property
    def kind(self) -> str:
        return self.params.kind

    @property
    def is_linear(self) -> bool:
        return not self.params.is_nonlinear

    @property
    def n_state(self) -> int:
        return self._n_state

    @property
    def n_residual(self) -> int:
        return 2 * self.dofmap.n_test

    def mass_matrix(self) -> sp.csr_matrix:
        return self._mass

    def boundary_values(self, pressures: Mapping[str, float]) -> Dict[str, float]:
        """Values placed in the Dirichlet slots: p_v for the linear kind, p_v / c^2 otherwise"""
        if self.is_linear:
            return {v: float(value) for v, value in pressures.items()}
        return {v: density(value, self.params.sound_speed) for v, value in pressures.items()}

    def load(self, t: float) -> np.ndarray:
        return np.concatenate([self.system.load(self.params.f, t), self.system.load(self.params.g, t)])

    def _element_fields(self, y: np.ndarray, trial_idx: np.ndarray, half: np.ndarray):
        n_broken = self.dofmap.n_broken
        rho_el = y[trial_idx]
        m_el = y[n_broken + trial_idx]
        scale = (1.0 / half)[:, None]
        rho = rho_el @ self._phi.T
        m = m_el @ self._phi.T
        return rho, rho_el @ self._dphi.T * scale, m, m_el @ self._dphi.T * scale, m_el @ self._pi_phi.T

    def nonlinear_terms(self, y: np.ndarray, with_jacobian: bool = False):
        """
        Moments of friction (+ convection) against the test functions.
        Returns the momentum-row vector and, on request, its Jacobian blocks w.r.t. rho and m.
        """
        params = self.params
        beta = params.friction_ratio
        area = params.area
        n_test, n_broken = self.dofmap.n_test, self.dofmap.n_broken
        vector = np.zeros(n_test)
        rows, cols, data = [], [], []

        for edge, trial_idx, test_idx, half in self._edge_tables:
            rho, drho, m, dm, pi_m = self._element_fields(y, trial_idx, half)
            if np.any(rho <= 0.0):
                raise VacuumState(f"Density is not positive on edge {edge} (min {np.min(rho):.3e})")

            weights = half[:, None] * self._rule.weights[None, :]
            inv = 1.0 / (area * rho)
            friction = beta * np.abs(m) * pi_m * inv
            total = friction
            if params.has_convection:
                total = total + 2.0 * m * dm * inv - m ** 2 * drho * inv / rho
            vector[test_idx] = (weights * total) @ self._psi

            if not with_jacobian:
                continue

            scale = (1.0 / half)[:, None, None]
            d_rho = -friction / rho
            d_m = beta * np.sign(m) * pi_m * inv
            d_pi_m = beta * np.abs(m) * inv
            d_drho = np.zeros_like(rho)
            d_dm = np.zeros_like(rho)
            if params.has_convection:
                d_m = d_m + 2.0 * dm * inv - 2.0 * m * drho * inv / rho
                d_dm = 2.0 * m * inv
                d_rho = d_rho - 2.0 * m * dm * inv / rho + 2.0 * m ** 2 * drho * inv / rho ** 2
                d_drho = -m ** 2 * inv / rho

            wrt_rho = (d_rho[:, :, None] * self._phi[None, :, :]
                       + d_drho[:, :, None] * self._dphi[None, :, :] * scale)
            wrt_m = (d_m[:, :, None] * self._phi[None, :, :]
                     + d_dm[:, :, None] * self._dphi[None, :, :] * scale
                     + d_pi_m[:, :, None] * self._pi_phi[None, :, :])
            block_rho = np.einsum('nq,qi,nqj->nij', weights, self._psi, wrt_rho)
            block_m = np.einsum('nq,qi,nqj->nij', weights, self._psi, wrt_m)

            n, k = test_idx.shape
            row_index = np.broadcast_to(n_test + test_idx[:, :, None], (n, k, k + 1))
            col_index = np.broadcast_to(trial_idx[:, None, :], (n, k, k + 1))
            rows += [row_index.ravel(), row_index.ravel()]
            cols += [col_index.ravel(), (n_broken + col_index).ravel()]
            data += [block_rho.ravel(), block_m.ravel()]

        if not with_jacobian:
            return vector
        shape = (2 * n_test, 2 * n_broken)
        if not data:
            return vector, sp.csr_matrix(shape)
        jacobian = sp.coo_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=shape
        ).tocsr()
        return vector, jacobian

    def spatial_residual(self, y: np.ndarray, t: float) -> np.ndarray:
        """S(y, t); the time derivative enters separately through the mass matrix"""
        residual = self._linear_part @ y - self.load(t)
        if self.params.is_nonlinear:
            residual[self.dofmap.n_test:] += self.nonlinear_terms(y)
        return residual

    def spatial_jacobian(self, y: np.ndarray, t: float) -> sp.csr_matrix:
        if not self.params.is_nonlinear:
            return self._linear_part
        _, jacobian = self.nonlinear_terms(y, with_jacobian=True)
        return (self._linear_part + jacobian).tocsr()

    def friction_dissipation(self, y: np.ndarray) -> float:
        """(beta |m| pi m / (A rho), pi m): nonnegative for any positive density"""
        beta = self.params.friction_ratio
        total = 0.0
        for edge, trial_idx, _, half in self._edge_tables:
            rho, _, m, _, pi_m = self._element_fields(y, trial_idx, half)
            if np.any(rho <= 0.0):
                raise VacuumState(f"Density is not positive on edge {edge}")
            weights = half[:, None] * self._rule.weights[None, :]
            total += float(np.sum(weights * beta * np.abs(m) * pi_m ** 2 / (self.params.area * rho)))
        return total

    def split(self, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        n_broken = self.dofmap.n_broken
        return y[:n_broken], y[n_broken:2 * n_broken]


def residual(model: GasModel, y: np.ndarray, t: float) -> np.ndarray:
    return model.spatial_residual(y, t)


def jacobian(model: GasModel, y: np.ndarray, t: float) -> sp.csr_matrix:
    return model.spatial_jacobian(y, t)


def energy(system: SemidiscreteSystem, y: np.ndarray) -> float:
    """a ||pi p_h||^2 + b ||pi m_h||^2 of a broken state vector"""
    n_broken = system.dofmap.n_broken
    return system.energy(y[:n_broken], y[n_broken:2 * n_broken])
