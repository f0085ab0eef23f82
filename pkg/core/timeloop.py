"""
Time integration of the semidiscrete DAE  E dy/dt + S(y, t) = 0

One-step implicit midpoint (default), backward Euler or the theta-weighted box scheme.
Coupling conditions and boundary pressures are imposed at the new time level, either through
the constrained trial space (monolithic) or through constraint rows with vertex multipliers (hybrid).
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.linalg import null_space
from scipy.sparse.linalg import splu

from config import CONSOLE_CONFIG, DOF_MODES, INTEGRATORS, MODEL_KINDS, SOLVER_CONFIG
from core.assembly import DofMap, build_dofmap, project_state
from core.errors import (
    MissingParameter,
    NewtonDiverged,
    SingularSystem,
    UnknownVertexInBoundaryCondition,
)
from core.fem import EdgeMesh
from core.models import GasModel, ModelParams, density, energy
from core.topology import NetworkGraph
from utils.helpers import display_progress_bar
from utils.validators import InputValidator, ParameterValidator

Signal = Callable[[float], float]


def _as_signal(value: Union[float, Signal]) -> Signal:
    if callable(value):
        return value
    constant = float(value)
    return lambda t: constant


@dataclass
class Scenario:
    """Everything needed to run one simulation on a pipe network"""
    graph: NetworkGraph
    meshes: Dict[str, EdgeMesh]
    degree: int
    params: ModelParams
    boundary: Dict[str, Union[float, Signal]]
    final_time: float
    dt: float
    integrator: str = SOLVER_CONFIG['integrator']
    hybrid: bool = False
    theta: float = SOLVER_CONFIG['theta']
    initial_pressure: Optional[object] = None
    initial_flux: Optional[object] = None
    newton_tol: float = SOLVER_CONFIG['newton_tol']
    newton_max_iter: int = SOLVER_CONFIG['newton_max_iter']
    name: str = 'scenario'

    def __post_init__(self):
        is_valid, error = ParameterValidator.validate_positive('dt', self.dt)
        if not is_valid:
            raise ValueError(error)
        is_valid, error = ParameterValidator.validate_nonnegative('T', self.final_time)
        if not is_valid:
            raise ValueError(error)
        is_valid, error = InputValidator.validate_choice(self.integrator, list(INTEGRATORS.values()))
        if not is_valid:
            raise ValueError(f"Unknown integrator '{self.integrator}': {error}")
        if not 0.5 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0.5, 1], got {self.theta}")

        for vertex in self.boundary:
            if vertex not in self.graph.vertex_index:
                raise UnknownVertexInBoundaryCondition(f"Boundary condition given for unknown vertex '{vertex}'")
            if vertex not in self.graph.boundary_vertices:
                raise UnknownVertexInBoundaryCondition(
                    f"Vertex '{vertex}' is a junction, boundary pressures apply to degree-one vertices only"
                )
        missing = [v for v in self.graph.ordered_boundary_vertices() if v not in self.boundary]
        if missing:
            raise MissingParameter(f"No boundary pressure for vertices: {', '.join(missing)}")

        self.boundary = {v: _as_signal(value) for v, value in self.boundary.items()}

    @property
    def mode(self) -> str:
        return DOF_MODES['HYBRID'] if self.hybrid else DOF_MODES['MONOLITHIC']

    @property
    def has_initial_fields(self) -> bool:
        return self.initial_pressure is not None or self.initial_flux is not None

    def boundary_pressures(self, t: float) -> Dict[str, float]:
        return {v: float(signal(t)) for v, signal in self.boundary.items()}

    def time_grid(self) -> Tuple[int, float]:
        """Number of steps and the step size that lands exactly on T"""
        if self.final_time == 0.0:
            return 0, self.dt
        n_steps = max(1, int(np.ceil(self.final_time / self.dt - 1e-9)))
        return n_steps, self.final_time / n_steps


@dataclass
class SimState:
    """Broken coefficient vector y = [p or rho; m] at time t, plus vertex multipliers in hybrid mode"""
    t: float
    y: np.ndarray
    multipliers: Optional[np.ndarray] = None
    newton_iterations: int = 0

    def copy(self) -> "SimState":
        multipliers = None if self.multipliers is None else self.multipliers.copy()
        return SimState(self.t, self.y.copy(), multipliers, self.newton_iterations)


@dataclass
class Trajectory:
    times: List[float] = field(default_factory=list)
    boundary_fluxes: Dict[str, List[float]] = field(default_factory=dict)
    snapshots: List[SimState] = field(default_factory=list)
    final_state: Optional[SimState] = None

    def flux_series(self, vertex: str) -> np.ndarray:
        return np.asarray(self.boundary_fluxes[vertex])


class TimeIntegrator:
    """Steady states, single steps and full runs of one scenario"""

    def __init__(self, scenario: Scenario, verbose: Optional[bool] = None):
        self.scenario = scenario
        self.verbose = CONSOLE_CONFIG['verbose'] if verbose is None else verbose
        self.dofmap: DofMap = build_dofmap(scenario.graph, scenario.meshes, scenario.degree, scenario.mode)
        self.model = GasModel(scenario.graph, scenario.meshes, self.dofmap, scenario.params)
        self.system = self.model.system
        self._prolongation = self.dofmap.prolongation()
        self._factor: Optional[Tuple[tuple, object]] = None
        self._null_basis: Optional[np.ndarray] = None

    # Constraint handling ------------------------------------------------------

    def _lifting(self, t: float) -> np.ndarray:
        return self.dofmap.boundary_lifting(self.model.boundary_values(self.scenario.boundary_pressures(t)))

    def _unknowns_from(self, state: SimState, t: float) -> np.ndarray:
        """Newton start: previous coefficients with boundary values moved to time t"""
        if not self.dofmap.is_hybrid:
            pressure, flux = self.dofmap.restrict(state.y)
            return np.concatenate([pressure, flux])
        y = state.y.copy()
        for vertex, value in self.model.boundary_values(self.scenario.boundary_pressures(t)).items():
            y[self.dofmap.boundary_slots[vertex]] = value
        multipliers = state.multipliers
        if multipliers is None:
            multipliers = self._vertex_values(y)
        return np.concatenate([y, multipliers])

    def _vertex_values(self, y: np.ndarray) -> np.ndarray:
        return np.array([
            y[self.dofmap.endpoint[(self.scenario.graph.incident_edges(v)[0][0], v)]]
            for v in self.dofmap.interior_vertices
        ])

    def _state_from(self, unknowns: np.ndarray, t: float, lifting: np.ndarray) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        if not self.dofmap.is_hybrid:
            return self._prolongation @ unknowns + lifting, None
        n_state = self.model.n_state
        return unknowns[:n_state].copy(), unknowns[n_state:].copy()

    def conforming(self, y: np.ndarray, t: float) -> np.ndarray:
        """Project a broken vector onto the coupled spaces with the boundary values at time t"""
        pressure, flux = self.dofmap.restrict(y)
        return self.dofmap.prolong(pressure, flux, self._lifting(t))

    # Newton driver --------------------------------------------------------------

    def _solve(self, residual: Callable[[np.ndarray], np.ndarray],
               jacobian: Callable[[np.ndarray], sp.spmatrix],
               t_constraint: float, guess: SimState, cache_key: Optional[tuple] = None) -> SimState:
        """
        Solve residual(y) = 0 over the coupled space at time t_constraint.
        Residual and Jacobian act on broken vectors; the constraint handling wraps them.
        """
        lifting = self._lifting(t_constraint)
        hybrid = self.dofmap.is_hybrid
        if hybrid:
            rhs = self.dofmap.constraint_rhs(self.model.boundary_values(self.scenario.boundary_pressures(t_constraint)))
            constraints = self.dofmap.constraints
            n_state = self.model.n_state
            n_mult = self.dofmap.n_multipliers

        def equations(unknowns):
            y, _ = self._state_from(unknowns, t_constraint, lifting)
            value = residual(y)
            if hybrid:
                value = np.concatenate([value, constraints @ unknowns - rhs])
            return value

        def full_jacobian(unknowns):
            y, _ = self._state_from(unknowns, t_constraint, lifting)
            matrix = jacobian(y)
            if hybrid:
                padding = sp.csr_matrix((matrix.shape[0], n_mult))
                return sp.vstack([sp.hstack([matrix, padding]), constraints], format='csc')
            return (matrix @ self._prolongation).tocsc()

        unknowns = self._unknowns_from(guess, t_constraint)
        value = equations(unknowns)
        norm = float(np.max(np.abs(value))) if value.size else 0.0
        tolerance = self.scenario.newton_tol * (1.0 + norm)
        max_iter = self.scenario.newton_max_iter

        iteration = 0
        while norm > tolerance:
            if iteration >= max_iter:
                raise NewtonDiverged(iteration, norm)
            factor = self._cached_factor(cache_key)
            if factor is None:
                factor = self._factorize(full_jacobian(unknowns))
                if cache_key is not None:
                    self._factor = (cache_key, factor)
            update = factor.solve(value)
            if not np.all(np.isfinite(update)):
                raise SingularSystem("Newton update is not finite")
            unknowns = unknowns - update
            value = equations(unknowns)
            norm = float(np.max(np.abs(value)))
            iteration += 1

        y, multipliers = self._state_from(unknowns, t_constraint, lifting)
        return SimState(t_constraint, y, multipliers, iteration)

    @staticmethod
    def _factorize(matrix: sp.csc_matrix):
        if matrix.shape[0] != matrix.shape[1]:
            raise SingularSystem(f"System matrix is not square: {matrix.shape}")
        try:
            return splu(matrix, permc_spec=SOLVER_CONFIG['permc_spec'])
        except RuntimeError as e:
            raise SingularSystem(str(e)) from e

    def _cached_factor(self, cache_key: Optional[tuple]):
        """The stored LU factor when it belongs to cache_key; only one factor is ever kept"""
        if cache_key is None or self._factor is None or self._factor[0] != cache_key:
            return None
        return self._factor[1]

    def _cache_key(self, *parts) -> Optional[tuple]:
        if not self.model.is_linear:
            return None
        return (self.dofmap.mode,) + parts

    # Steady states ----------------------------------------------------------------

    def steady_state(self, t: float = 0.0) -> SimState:
        """Solve S(y, t) = 0 with the boundary pressures frozen at time t"""
        guess = self._steady_guess(t)
        state = self._solve(
            lambda y: self.model.spatial_residual(y, t),
            lambda y: self.model.spatial_jacobian(y, t),
            t, guess, self._cache_key('steady'),
        )
        if self.verbose:
            print(f"✅ Steady state at t={t:g} after {state.newton_iterations} Newton iterations")
        return state

    def _steady_guess(self, t: float) -> SimState:
        zero = SimState(t, np.zeros(self.model.n_state))
        if self.model.is_linear:
            return zero

        # Unit-resistor linear solution, then rescaled to the quadratic friction law
        params = self.scenario.params
        linear = TimeIntegrator(
            Scenario(self.scenario.graph, self.scenario.meshes, self.scenario.degree,
                     ModelParams(MODEL_KINDS['LINEAR'], a=1.0, b=1.0, d=1.0),
                     dict(self.scenario.boundary), self.scenario.final_time, self.scenario.dt,
                     self.scenario.integrator, self.scenario.hybrid,
                     newton_tol=self.scenario.newton_tol, newton_max_iter=self.scenario.newton_max_iter),
            verbose=False,
        )
        reference = linear.steady_state(t)
        pressure, flux = linear.model.split(reference.y)
        rho = np.maximum(pressure, 1e-3 * np.min(list(self.scenario.boundary_pressures(t).values()))) \
            / params.sound_speed ** 2
        if params.friction_ratio > 0.0:
            mean_rho = float(np.mean(rho))
            flux = np.sign(flux) * np.sqrt(params.area ** 2 * mean_rho * np.abs(flux) / params.friction_ratio)
        guess = SimState(t, np.concatenate([rho, flux]))
        if self.dofmap.is_hybrid:
            guess.multipliers = self._vertex_values(guess.y)
        return guess

    # Time stepping ------------------------------------------------------------------

    def initial_state(self) -> SimState:
        scenario = self.scenario
        if not scenario.has_initial_fields:
            return self.steady_state(0.0)

        pressure = scenario.initial_pressure if scenario.initial_pressure is not None else 0.0
        flux = scenario.initial_flux if scenario.initial_flux is not None else 0.0
        if not self.model.is_linear:
            pressure = _density_field(pressure, scenario.params.sound_speed)
        y = self.conforming(project_state(self.system, pressure, flux), 0.0)
        state = SimState(0.0, y)
        if self.dofmap.is_hybrid:
            state.multipliers = self._vertex_values(y)
        return state

    @property
    def weight(self) -> float:
        """theta of the one-leg step: 1/2 for the midpoint rule, 1 for backward Euler"""
        integrator = self.scenario.integrator
        if integrator == INTEGRATORS['MIDPOINT']:
            return 0.5
        if integrator == INTEGRATORS['BACKWARD_EULER']:
            return 1.0
        return self.scenario.theta

    def step(self, state: SimState, dt: float) -> SimState:
        """
        Advance one step of size dt:
        E (y1 - y0) / dt + S(theta y1 + (1 - theta) y0, t0 + theta dt) = 0, constraints at t1
        """
        E = self.model.mass_matrix()
        y0 = state.y
        t1 = state.t + dt
        theta = self.weight
        t_theta = state.t + theta * dt

        def residual(y1):
            return E @ (y1 - y0) / dt + self.model.spatial_residual(theta * y1 + (1.0 - theta) * y0, t_theta)

        def jacobian(y1):
            return E / dt + theta * self.model.spatial_jacobian(theta * y1 + (1.0 - theta) * y0, t_theta)

        new_state = self._solve(residual, jacobian, t1, state, self._cache_key('step', theta, dt))
        new_state.t = t1
        return new_state

    def boundary_fluxes(self, state: SimState) -> Dict[str, float]:
        """m^e(v) at every boundary vertex, signed along the orientation of its edge"""
        n_broken = self.dofmap.n_broken
        fluxes = {}
        for vertex in self.scenario.graph.ordered_boundary_vertices():
            edge_id, _ = self.scenario.graph.incident_edges(vertex)[0]
            fluxes[vertex] = float(state.y[n_broken + self.dofmap.endpoint[(edge_id, vertex)]])
        return fluxes

    def integrate(self, snapshot_every: int = 0, initial: Optional[SimState] = None) -> Trajectory:
        """Run from t = 0 to T, recording boundary fluxes at every step"""
        state = initial if initial is not None else self.initial_state()
        n_steps, dt = self.scenario.time_grid()
        trajectory = Trajectory()
        self._record(trajectory, state, 0, snapshot_every)

        if self.verbose:
            print(f"🚀 Integrating '{self.scenario.name}': {n_steps} steps of {dt:.4g} "
                  f"({self.scenario.integrator}, {self.model.kind}, {self.dofmap.mode})")

        progress_every = max(1, n_steps * CONSOLE_CONFIG['progress_every'] // 100) if n_steps else 1
        for n in range(1, n_steps + 1):
            state = self.step(state, dt)
            state.t = n * dt
            self._record(trajectory, state, n, snapshot_every)
            if self.verbose and n % progress_every == 0:
                print(f"   {display_progress_bar(state.t, self.scenario.final_time, label=self.scenario.integrator)} "
                      f"step {n}/{n_steps}, Newton iterations: {state.newton_iterations}")

        trajectory.final_state = state
        return trajectory

    def _record(self, trajectory: Trajectory, state: SimState, n: int, snapshot_every: int):
        trajectory.times.append(state.t)
        for vertex, value in self.boundary_fluxes(state).items():
            trajectory.boundary_fluxes.setdefault(vertex, []).append(value)
        if snapshot_every and n % snapshot_every == 0:
            trajectory.snapshots.append(state.copy())

    # Diagnostics ------------------------------------------------------------------------

    def energy(self, state: SimState) -> float:
        return energy(self.system, state.y)

    def algebraic_residual(self, state: SimState) -> np.ndarray:
        """
        Components of S(y, t) in the left null space of the constrained mass operator.
        Vanishes along exact solutions when the boundary data do not change in time.
        """
        if self._null_basis is None:
            constrained = (self.model.mass_matrix() @ self._prolongation).toarray()
            self._null_basis = null_space(constrained.T)
        return self._null_basis.T @ self.model.spatial_residual(state.y, state.t)

    def snapshot_rows(self, state: SimState) -> List[tuple]:
        """(t, edge, element, node, p, m) at every Gauss-Lobatto node"""
        k = self.dofmap.degree
        n_broken = self.dofmap.n_broken
        factor = 1.0 if self.model.is_linear else self.scenario.params.sound_speed ** 2
        rows = []
        for edge in self.dofmap.edges:
            offset = self.dofmap.trial_offsets[edge]
            for element in range(self.dofmap.n_elements[edge]):
                for node in range(k + 1):
                    index = offset + element * k + node
                    rows.append((state.t, edge, element, node,
                                 factor * state.y[index], state.y[n_broken + index]))
        return rows


def _density_field(pressure, sound_speed: float):
    if isinstance(pressure, Mapping):
        return {edge: _density_field(value, sound_speed) for edge, value in pressure.items()}
    if callable(pressure):
        return lambda x: np.asarray(pressure(x), dtype=float) / sound_speed ** 2
    return density(pressure, sound_speed)


def steady_state(scenario: Scenario, t: float = 0.0) -> SimState:
    return TimeIntegrator(scenario).steady_state(t)


def integrate(scenario: Scenario, snapshot_every: int = 0) -> Tuple[Trajectory, TimeIntegrator]:
    integrator = TimeIntegrator(scenario)
    return integrator.integrate(snapshot_every), integrator
