"""
Convergence studies
Pairwise errors between nested meshes on the seven-pipe network, manufactured solutions on a
single pipe and on a three-pipe junction, the friction-averaging check and boundary-flux
recordings for all model kinds.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import HARNESS_CONFIG, INTEGRATORS, MODEL_KINDS, OUTPUT_CONFIG, QUADRATURE_CONFIG, NETWORK_STUDY
from core.assembly import edge_function
from core.errors import MeshMismatch
from core.fem import EdgeMesh, evaluate, gauss_rule, make_basis, mesh_for_size, trial_at_points, uniform_mesh
from core.models import ModelParams
from core.timeloop import Scenario, TimeIntegrator, Trajectory
from core.topology import build_graph, seven_pipe_network
from utils.expressions import parse_expression
from utils.helpers import format_float, format_table_data


@dataclass
class FieldSolution:
    """Pressure and flux coefficients per edge at one time"""
    t: float
    degree: int
    meshes: Dict[str, EdgeMesh]
    pressure: Dict[str, np.ndarray]
    flux: Dict[str, np.ndarray]

    @classmethod
    def from_state(cls, integrator: TimeIntegrator, state) -> "FieldSolution":
        n_broken = integrator.dofmap.n_broken
        params = integrator.scenario.params
        factor = 1.0 if not params.is_nonlinear else params.sound_speed ** 2
        pressure, flux = {}, {}
        for edge in integrator.dofmap.edges:
            block = integrator.dofmap.edge_slice(edge)
            pressure[edge] = factor * state.y[:n_broken][block]
            flux[edge] = state.y[n_broken:2 * n_broken][block].copy()
        return cls(state.t, integrator.dofmap.degree, dict(integrator.scenario.meshes), pressure, flux)


@dataclass
class ConvergenceRow:
    h: float
    error: float
    eoc: Optional[float] = None


@dataclass
class ConvergenceReport:
    kind: str
    degree: int
    rows: List[ConvergenceRow] = field(default_factory=list)
    metadata: Dict[str, str] = field(default_factory=dict)

    @property
    def errors(self) -> List[float]:
        return [row.error for row in self.rows]

    @property
    def eocs(self) -> List[float]:
        return [row.eoc for row in self.rows if row.eoc is not None]

    def to_text(self) -> str:
        lines = [f"Convergence study: {self.kind} (k={self.degree})"]
        lines += [f"  {key}: {value}" for key, value in self.metadata.items()]
        rows = [[f"{row.h:.6g}", f"{row.error:.4e}", "-" if row.eoc is None else f"{row.eoc:.2f}"]
                for row in self.rows]
        lines += format_table_data(['h', 'e_h', 'eoc'], rows)
        return "\n".join(lines) + "\n"

    def to_csv_rows(self) -> List[Dict[str, str]]:
        return [{
            'h': format_float(row.h),
            'e_h': format_float(row.error),
            'eoc': '' if row.eoc is None else format_float(row.eoc),
        } for row in self.rows]


def experimental_orders(errors: Sequence[float]) -> List[Optional[float]]:
    """log2(e_{i-1} / e_i) for consecutive halvings; first entry None"""
    orders: List[Optional[float]] = [None]
    for previous, current in zip(errors[:-1], errors[1:]):
        if previous > 0.0 and current > 0.0:
            orders.append(math.log2(previous / current))
        else:
            orders.append(None)
    return orders


def make_report(kind: str, degree: int, sizes: Sequence[float], errors: Sequence[float],
                metadata: Optional[Dict[str, str]] = None) -> ConvergenceReport:
    rows = [ConvergenceRow(h, e, eoc) for h, e, eoc in zip(sizes, errors, experimental_orders(errors))]
    return ConvergenceReport(kind, degree, rows, dict(metadata or {}))


def pairwise_error(coarse: FieldSolution, fine: FieldSolution, a: float = 1.0, b: float = 1.0) -> float:
    """
    (a ||p_h - p_{h/2}||^2 + b ||m_h - m_{h/2}||^2)^{1/2}, the coarse fields injected into the
    fine mesh and integrated with k+2 Gauss points per fine element
    """
    basis = make_basis(fine.degree)
    coarse_basis = make_basis(coarse.degree)
    rule = gauss_rule(fine.degree + QUADRATURE_CONFIG['error_extra_points'])
    total = 0.0
    for edge, fine_mesh in fine.meshes.items():
        coarse_mesh = coarse.meshes.get(edge)
        if coarse_mesh is None or not fine_mesh.is_refinement_of(coarse_mesh):
            raise MeshMismatch(f"Mesh of edge {edge} is not a refinement of the coarse mesh")
        x = fine_mesh.physical_points(rule.points)
        weights = rule.weights[None, :] * (0.5 * fine_mesh.sizes)[:, None]
        for weight, coarse_field, fine_field in ((a, coarse.pressure, fine.pressure), (b, coarse.flux, fine.flux)):
            coarse_values = evaluate(coarse_field[edge], coarse_mesh, coarse_basis, x.ravel()).reshape(x.shape)
            fine_values = trial_at_points(fine_field[edge], fine_mesh, basis, rule.points)
            total += weight * float(np.sum(weights * (coarse_values - fine_values) ** 2))
    return math.sqrt(total)


def exact_error(solution: FieldSolution, pressure: Callable, flux: Callable, a: float = 1.0, b: float = 1.0) -> float:
    """
    Weighted L2 distance of the discrete fields to exact fields p(x, t), m(x, t) at the solution time;
    the exact fields may be given per edge
    """
    basis = make_basis(solution.degree)
    rule = gauss_rule(solution.degree + QUADRATURE_CONFIG['error_extra_points'])
    total = 0.0
    for edge, mesh in solution.meshes.items():
        x = mesh.physical_points(rule.points)
        weights = rule.weights[None, :] * (0.5 * mesh.sizes)[:, None]
        for weight, exact, coefficients in ((a, pressure, solution.pressure), (b, flux, solution.flux)):
            values = trial_at_points(coefficients[edge], mesh, basis, rule.points)
            total += weight * float(np.sum(weights * (values - edge_function(exact, edge)(x, solution.t)) ** 2))
    return math.sqrt(total)


# Seven-pipe network experiment ----------------------------------------------------

def network_params(kind: str) -> ModelParams:
    if kind == MODEL_KINDS['LINEAR']:
        return ModelParams(kind, a=1.0, b=1.0, d=1.0)
    # lambda / (2 D) = 7/2 with A = c = D = 1
    return ModelParams(kind, area=1.0, diameter=1.0,
                       friction_factor=2.0 * NETWORK_STUDY['friction_ratio'], sound_speed=1.0)


def network_scenario(kind: str, h: float, degree: int = 1, hybrid: bool = False,
                     final_time: Optional[float] = None, integrator: Optional[str] = None,
                     params: Optional[ModelParams] = None) -> Scenario:
    """
    Seven unit pipes, p(v1) = 1, p(v6) = 1 + sin(pi t)/2, started from the steady state, dt = h.
    Without an explicit integrator the kind picks it: midpoint for linear and semilinear,
    the theta-weighted box scheme for quasilinear.
    """
    if integrator is None:
        integrator = NETWORK_STUDY['integrators'][kind]
    graph = seven_pipe_network()
    meshes = {edge.id: mesh_for_size(edge.id, edge.length, h) for edge in graph.edges}
    boundary = {v: parse_expression(text).as_signal() for v, text in NETWORK_STUDY['boundary'].items()}
    return Scenario(
        graph=graph,
        meshes=meshes,
        degree=degree,
        params=params if params is not None else network_params(kind),
        boundary=boundary,
        final_time=NETWORK_STUDY['final_time'] if final_time is None else final_time,
        dt=NETWORK_STUDY['dt_per_h'] * h,
        integrator=integrator,
        hybrid=hybrid,
        theta=NETWORK_STUDY['theta'],
        name=f"network-{kind}-h{h:g}",
    )


def _final_solution(scenario: Scenario, verbose: bool) -> FieldSolution:
    integrator = TimeIntegrator(scenario, verbose=verbose)
    trajectory = integrator.integrate()
    return FieldSolution.from_state(integrator, trajectory.final_state)


def _error_weights(params: ModelParams) -> Tuple[float, float]:
    if params.is_nonlinear:
        return 1.0, 1.0
    return params.a, params.b


def run_scenarios(scenarios: Sequence[Scenario], threads: Optional[int] = None,
                  verbose: bool = False) -> List[FieldSolution]:
    """Final fields of independent runs, in input order"""
    threads = HARNESS_CONFIG['threads'] if threads is None else threads
    if threads <= 1:
        return [_final_solution(scenario, verbose) for scenario in scenarios]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda scenario: _final_solution(scenario, verbose), scenarios))


def run_network_study(kind: str, levels: int = 5, degree: int = 1, threads: Optional[int] = None,
                      hybrid: bool = False, final_time: Optional[float] = None,
                      integrator: Optional[str] = None, verbose: bool = False) -> ConvergenceReport:
    """e_h between consecutive uniform refinements at T and the experimental orders"""
    sizes = NETWORK_STUDY['mesh_sizes']
    if levels < 1 or levels + 1 > len(sizes):
        raise ValueError(f"levels must be between 1 and {len(sizes) - 1}, got {levels}")

    scenarios = [network_scenario(kind, h, degree, hybrid, final_time, integrator) for h in sizes[:levels + 1]]
    solutions = run_scenarios(scenarios, threads, verbose)
    a, b = _error_weights(scenarios[0].params)
    errors = [pairwise_error(coarse, fine, a, b) for coarse, fine in zip(solutions[:-1], solutions[1:])]

    if verbose:
        for h, error in zip(sizes, errors):
            print(f"📊 {kind}: h={h:g}, e_h={error:.4e}")

    return make_report(kind, degree, sizes[:levels], errors, {
        'scenario': 'seven-pipe network',
        'final_time': f"{scenarios[0].final_time:g}",
        'dt': f"{NETWORK_STUDY['dt_per_h']:g} * h",
        'integrator': scenarios[0].integrator if scenarios[0].integrator != INTEGRATORS['THETA']
        else f"theta = {scenarios[0].theta:g}",
    })


# Manufactured solution on one pipe --------------------------------------------------

def manufactured_fields(a: float = 1.0, b: float = 1.0):
    """
    Exact fields p = sin(pi x) cos t + x, m = cos(pi x) sin t + 1 on [0, 1], the piecewise constant
    friction d = 1 on [0, 1/2), 2 on [1/2, 1] and the matching right-hand sides f, g
    """
    pi = np.pi

    def friction(x):
        return np.where(np.asarray(x) < 0.5, 1.0, 2.0)

    def pressure(x, t):
        return np.sin(pi * x) * np.cos(t) + x

    def flux(x, t):
        return np.cos(pi * x) * np.sin(t) + 1.0

    def f(x, t):
        return -(a + pi) * np.sin(pi * x) * np.sin(t)

    def g(x, t):
        return (b + pi) * np.cos(pi * x) * np.cos(t) + 1.0 + friction(x) * flux(x, t)

    return pressure, flux, friction, f, g


def manufactured_scenario(degree: int, n_elements: int, a: float = 1.0, b: float = 1.0,
                          final_time: Optional[float] = None, hybrid: bool = False) -> Scenario:
    pressure, flux, friction, f, g = manufactured_fields(a, b)
    graph = build_graph([('e1', 'v1', 'v2', 1.0)])
    h = 1.0 / n_elements
    dt = HARNESS_CONFIG['manufactured_dt_factor'] * h ** ((degree + 1) / 2.0)
    return Scenario(
        graph=graph,
        meshes={'e1': uniform_mesh('e1', 1.0, n_elements)},
        degree=degree,
        params=ModelParams(MODEL_KINDS['LINEAR'], a=a, b=b, d=friction, f=f, g=g),
        boundary={'v1': lambda t: float(pressure(0.0, t)), 'v2': lambda t: float(pressure(1.0, t))},
        final_time=HARNESS_CONFIG['manufactured_final_time'] if final_time is None else final_time,
        dt=dt,
        hybrid=hybrid,
        initial_pressure=lambda x: pressure(x, 0.0),
        initial_flux=lambda x: flux(x, 0.0),
        name=f"manufactured-k{degree}-N{n_elements}",
    )


def run_manufactured(degree: int, levels: int = 4, n0: Optional[int] = None, a: float = 1.0, b: float = 1.0,
                     final_time: Optional[float] = None, threads: Optional[int] = None,
                     verbose: bool = False) -> ConvergenceReport:
    """Errors against the exact fields at T on N0, 2 N0, ... elements; eoc tends to k+1"""
    n0 = HARNESS_CONFIG['manufactured_elements'] if n0 is None else n0
    pressure, flux, *_ = manufactured_fields(a, b)
    scenarios = [manufactured_scenario(degree, n0 * 2 ** level, a, b, final_time) for level in range(levels)]
    solutions = run_scenarios(scenarios, threads, verbose)
    errors = [exact_error(solution, pressure, flux, a, b) for solution in solutions]
    sizes = [1.0 / (n0 * 2 ** level) for level in range(levels)]
    return make_report(MODEL_KINDS['LINEAR'], degree, sizes, errors, {
        'scenario': 'manufactured single pipe',
        'final_time': f"{scenarios[0].final_time:g}",
        'dt': f"{HARNESS_CONFIG['manufactured_dt_factor']:g} * h^((k+1)/2)",
    })


# Manufactured solution on a junction ------------------------------------------------

JUNCTION_EDGES = [('e1', 'v1', 'v2', 1.0), ('e2', 'v2', 'v3', 1.0), ('e3', 'v2', 'v4', 1.0)]


def junction_fields(a: float = 1.0, b: float = 1.0, d: float = 1.0):
    """
    Exact fields on e1: v1 -> v2, e2: v2 -> v3, e3: v2 -> v4 with a common pressure 1 + cos t
    and the flux balance 2 sin t = sin t + sin t at v2, plus the per-edge right-hand sides
    """
    pi = np.pi
    # p, dp/dt, dp/dx, m, dm/dt, dm/dx
    parts = {
        'e1': (lambda x, t: 1.0 + np.cos(t) * np.sin(pi * x / 2),
               lambda x, t: -np.sin(t) * np.sin(pi * x / 2),
               lambda x, t: 0.5 * pi * np.cos(t) * np.cos(pi * x / 2),
               lambda x, t: np.sin(t) * (1.0 + x ** 2),
               lambda x, t: np.cos(t) * (1.0 + x ** 2),
               lambda x, t: 2.0 * x * np.sin(t)),
        'e2': (lambda x, t: 1.0 + np.cos(t) * np.cos(pi * x / 2),
               lambda x, t: -np.sin(t) * np.cos(pi * x / 2),
               lambda x, t: -0.5 * pi * np.cos(t) * np.sin(pi * x / 2),
               lambda x, t: np.sin(t) * (1.0 + np.sin(pi * x)),
               lambda x, t: np.cos(t) * (1.0 + np.sin(pi * x)),
               lambda x, t: pi * np.sin(t) * np.cos(pi * x)),
        'e3': (lambda x, t: 1.0 + np.cos(t) * np.cos(pi * x),
               lambda x, t: -np.sin(t) * np.cos(pi * x),
               lambda x, t: -pi * np.cos(t) * np.sin(pi * x),
               lambda x, t: np.sin(t) * np.cos(pi * x / 2),
               lambda x, t: np.cos(t) * np.cos(pi * x / 2),
               lambda x, t: -0.5 * pi * np.sin(t) * np.sin(pi * x / 2)),
    }

    def f_of(p_t, m_x):
        return lambda x, t: a * p_t(x, t) + m_x(x, t)

    def g_of(p_x, m, m_t):
        return lambda x, t: b * m_t(x, t) + p_x(x, t) + d * m(x, t)

    pressure = {edge: part[0] for edge, part in parts.items()}
    flux = {edge: part[3] for edge, part in parts.items()}
    f = {edge: f_of(part[1], part[5]) for edge, part in parts.items()}
    g = {edge: g_of(part[2], part[3], part[4]) for edge, part in parts.items()}
    return pressure, flux, f, g


def junction_scenario(degree: int, n_elements: int, final_time: Optional[float] = None,
                      hybrid: bool = False) -> Scenario:
    pressure, flux, f, g = junction_fields()
    graph = build_graph(JUNCTION_EDGES)
    h = 1.0 / n_elements
    ends = {'v1': ('e1', 0.0), 'v3': ('e2', 1.0), 'v4': ('e3', 1.0)}
    boundary = {vertex: (lambda edge, x: lambda t: float(pressure[edge](x, t)))(edge, x)
                for vertex, (edge, x) in ends.items()}
    return Scenario(
        graph=graph,
        meshes={edge.id: uniform_mesh(edge.id, edge.length, n_elements) for edge in graph.edges},
        degree=degree,
        params=ModelParams(MODEL_KINDS['LINEAR'], a=1.0, b=1.0, d=1.0, f=f, g=g),
        boundary=boundary,
        final_time=HARNESS_CONFIG['manufactured_final_time'] if final_time is None else final_time,
        dt=HARNESS_CONFIG['manufactured_dt_factor'] * h ** ((degree + 1) / 2.0),
        hybrid=hybrid,
        initial_pressure={edge: (lambda p: lambda x: p(x, 0.0))(p) for edge, p in pressure.items()},
        initial_flux={edge: (lambda m: lambda x: m(x, 0.0))(m) for edge, m in flux.items()},
        name=f"junction-k{degree}-N{n_elements}",
    )


def run_junction_manufactured(degree: int, levels: int = 4, n0: Optional[int] = None, hybrid: bool = False,
                              final_time: Optional[float] = None, threads: Optional[int] = None,
                              verbose: bool = False) -> ConvergenceReport:
    """Exact errors at T for the three-pipe junction; the vertex coupling keeps the order k+1"""
    n0 = HARNESS_CONFIG['manufactured_elements'] if n0 is None else n0
    pressure, flux, _, _ = junction_fields()
    scenarios = [junction_scenario(degree, n0 * 2 ** level, final_time, hybrid) for level in range(levels)]
    solutions = run_scenarios(scenarios, threads, verbose)
    errors = [exact_error(solution, pressure, flux) for solution in solutions]
    sizes = [1.0 / (n0 * 2 ** level) for level in range(levels)]
    return make_report(MODEL_KINDS['LINEAR'], degree, sizes, errors, {
        'scenario': 'manufactured three-pipe junction',
        'final_time': f"{scenarios[0].final_time:g}",
        'dt': f"{HARNESS_CONFIG['manufactured_dt_factor']:g} * h^((k+1)/2)",
    })


# Friction averaging -----------------------------------------------------------------

def elementwise_average(function: Callable, mesh: EdgeMesh, n_points: int = 8) -> Callable:
    """Piecewise constant function equal to the element means of `function` on `mesh`"""
    rule = gauss_rule(n_points)
    values = np.asarray(function(mesh.physical_points(rule.points)), dtype=float)
    means = 0.5 * (values @ rule.weights)

    def averaged(x):
        element, _ = mesh.locate(np.ravel(x))
        return means[element].reshape(np.shape(x))
    return averaged


def friction_averaging_gap(h: float, degree: int = 1, final_time: float = 1.0) -> float:
    """
    Distance at T between the linear seven-pipe solutions with d(x) = 1 + x / l and with its
    element means; of order h^{k+1}, zero for k = 1
    """
    graph = seven_pipe_network()
    smooth = {edge.id: (lambda length: lambda x: 1.0 + x / length)(edge.length) for edge in graph.edges}
    exact_scenario = network_scenario(MODEL_KINDS['LINEAR'], h, degree, final_time=final_time,
                                     params=ModelParams(MODEL_KINDS['LINEAR'], d=smooth))
    averaged = {edge: elementwise_average(smooth[edge], mesh) for edge, mesh in exact_scenario.meshes.items()}
    averaged_scenario = network_scenario(MODEL_KINDS['LINEAR'], h, degree, final_time=final_time,
                                        params=ModelParams(MODEL_KINDS['LINEAR'], d=averaged))
    first, second = run_scenarios([exact_scenario, averaged_scenario], threads=1)
    return pairwise_error(first, second)


# Boundary flux recordings -------------------------------------------------------------

def run_flux_comparison(kinds: Optional[Sequence[str]] = None, h: float = 0.1, degree: int = 1,
                        final_time: Optional[float] = None, threads: Optional[int] = None,
                        verbose: bool = False) -> Dict[str, Trajectory]:
    """Boundary flux series of the seven-pipe scenario for each model kind"""
    kinds = list(MODEL_KINDS.values()) if kinds is None else list(kinds)
    threads = HARNESS_CONFIG['threads'] if threads is None else threads

    def run(kind):
        return TimeIntegrator(network_scenario(kind, h, degree, final_time=final_time), verbose=verbose).integrate()

    if threads <= 1:
        return {kind: run(kind) for kind in kinds}
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return dict(zip(kinds, pool.map(run, kinds)))


def periodicity_defect(times: Sequence[float], series: Sequence[float], period: float = 2.0,
                       window: Tuple[float, float] = (8.0, 10.0)) -> float:
    """max |m(t) - m(t - period)| over the window, relative to max |m| over the window"""
    times = np.asarray(times)
    series = np.asarray(series)
    inside = (times >= window[0] - 1e-12) & (times <= window[1] + 1e-12)
    shifted = np.interp(times[inside] - period, times, series)
    scale = float(np.max(np.abs(series[inside])))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(series[inside] - shifted))) / scale


def report_filename(kind: str, suffix: str) -> str:
    return OUTPUT_CONFIG['report_stem'].format(kind=kind) + suffix
