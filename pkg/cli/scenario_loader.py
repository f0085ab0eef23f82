"""
Scenario files and run configuration

A scenario file is sectioned `key = value` text:

    [network]      file = <network file, relative to the scenario file>
    [parameters]   kind, a, b, d, d.<edge>, A, D, lambda, c, convection (on/off)
    [boundary]     <vertex> = <expression in t>
    [sources]      f = <expression in x, t>, g = ...
    [initial]      p = <expression in x>, m = ...   (omit to start from the steady state)
    [solver]       k, h or elements, dt, T, integrator, theta, hybrid, newton_tol, newton_max_iter

`#` starts a comment.
"""

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from config import INTEGRATORS, MODEL_KINDS, SCENARIO_DEFAULTS, SOLVER_CONFIG
from core.errors import MissingParameter, ParseError
from core.fem import mesh_for_size, uniform_mesh
from core.models import ModelParams
from core.timeloop import Scenario
from core.topology import NetworkGraph, load_network
from utils.expressions import parse_expression
from utils.validators import InputValidator

SECTIONS = ('network', 'parameters', 'boundary', 'sources', 'initial', 'solver')
SECTION_PATTERN = re.compile(r'^\[\s*([A-Za-z_]+)\s*\]$')

PARAMETER_KEYS = {
    'kind': 'kind',
    'a': 'a',
    'b': 'b',
    'd': 'd',
    'A': 'area',
    'D': 'diameter',
    'lambda': 'friction_factor',
    'c': 'sound_speed',
}

SOLVER_KEYS = ('k', 'h', 'elements', 'dt', 'T', 'integrator', 'theta', 'hybrid', 'newton_tol', 'newton_max_iter')


@dataclass(frozen=True)
class Entry:
    """One `key = value` line with its position for error messages"""
    value: str
    line: int
    column: int


@dataclass
class RunConfig:
    command: str
    network_path: Optional[str] = None
    scenario_path: Optional[str] = None
    out_dir: str = '.'
    overrides: Dict[str, Any] = field(default_factory=dict)

    def override(self, name: str, default=None):
        value = self.overrides.get(name)
        return default if value is None else value


def parse_scenario_text(text: str) -> Dict[str, Dict[str, Entry]]:
    """Split a scenario file into sections of positioned entries"""
    sections: Dict[str, Dict[str, Entry]] = {}
    current: Optional[str] = None

    for line_number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split('#', 1)[0].rstrip()
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip())
        stripped = line.strip()

        header = SECTION_PATTERN.match(stripped)
        if header:
            current = header.group(1).lower()
            if current not in SECTIONS:
                raise ParseError(f"Unknown section [{current}]", line_number, indent + 2)
            sections.setdefault(current, {})
            continue

        if current is None:
            raise ParseError("Entry outside of any [section]", line_number, indent + 1)
        if '=' not in stripped:
            raise ParseError("Expected 'key = value'", line_number, indent + 1)

        key, _, value = stripped.partition('=')
        key = key.strip()
        if not key:
            raise ParseError("Missing key before '='", line_number, indent + 1)
        value_column = line.index('=') + 1 + (len(value) - len(value.lstrip())) + 1
        if not value.strip():
            raise ParseError(f"Missing value for '{key}'", line_number, line.index('=') + 2)
        if key in sections[current]:
            raise ParseError(f"Duplicate key '{key}' in [{current}]", line_number, indent + 1)
        sections[current][key] = Entry(value.strip(), line_number, value_column)

    return sections


def _expression(entry: Entry):
    return parse_expression(entry.value, entry.line, entry.column - 1)


def _constant(entry: Entry, name: str) -> float:
    expression = _expression(entry)
    if not expression.is_constant:
        raise ParseError(f"'{name}' must be a constant", entry.line, entry.column)
    return float(expression())


def _integer(entry: Entry, name: str) -> int:
    try:
        return int(entry.value)
    except ValueError:
        raise ParseError(f"'{name}' must be an integer, got '{entry.value}'", entry.line, entry.column) from None


def _choice(entry: Entry, name: str, choices) -> str:
    is_valid, error = InputValidator.validate_choice(entry.value, list(choices))
    if not is_valid:
        raise ParseError(f"Invalid {name}: {error}", entry.line, entry.column)
    return entry.value.strip().lower()


def _on_off(entry: Entry, name: str) -> bool:
    is_valid, is_on, error = InputValidator.validate_on_off(entry.value)
    if not is_valid:
        raise ParseError(f"Invalid {name}: {error}", entry.line, entry.column)
    return is_on


def _field_or_constant(entry: Entry):
    expression = _expression(entry)
    if expression.is_constant:
        return float(expression())
    if 't' in expression.variables:
        raise ParseError("Expected a function of x only", entry.line, entry.column)
    return expression.as_field()


def build_params(sections: Dict[str, Dict[str, Entry]], graph: NetworkGraph,
                 kind_override: Optional[str] = None) -> ModelParams:
    entries = sections.get('parameters', {})
    values: Dict[str, Any] = {}
    friction: Dict[str, Any] = {}

    for key, entry in entries.items():
        if key.startswith('d.'):
            edge = key[2:]
            if edge not in graph.edge_index:
                raise ParseError(f"Unknown edge '{edge}' in friction override", entry.line, 1)
            friction[edge] = _field_or_constant(entry)
        elif key == 'kind':
            values['kind'] = _choice(entry, 'model kind', MODEL_KINDS.values())
        elif key == 'convection':
            values['convection'] = _on_off(entry, 'convection')
        elif key == 'd':
            friction['default'] = _field_or_constant(entry)
        elif key in PARAMETER_KEYS:
            values[PARAMETER_KEYS[key]] = _constant(entry, key)
        else:
            raise ParseError(f"Unknown parameter '{key}'", entry.line, 1)

    if kind_override is not None:
        values['kind'] = kind_override
    if friction:
        friction.setdefault('default', SCENARIO_DEFAULTS['d'])
        values['d'] = friction if set(friction) != {'default'} else friction['default']

    sources = sections.get('sources', {})
    for key, entry in sources.items():
        if key not in ('f', 'g'):
            raise ParseError(f"Unknown source '{key}', expected f or g", entry.line, 1)
        expression = _expression(entry)
        values[key] = float(expression()) if expression.is_constant else expression.as_source()

    return ModelParams(**values)


def build_scenario(sections: Dict[str, Dict[str, Entry]], graph: NetworkGraph,
                   overrides: Optional[Dict[str, Any]] = None, name: str = 'scenario') -> Scenario:
    """Resolve a parsed scenario file plus command line overrides"""
    overrides = {key: value for key, value in (overrides or {}).items() if value is not None}
    solver = sections.get('solver', {})
    for key, entry in solver.items():
        if key not in SOLVER_KEYS:
            raise ParseError(f"Unknown solver setting '{key}'", entry.line, 1)

    params = build_params(sections, graph, overrides.get('kind'))

    boundary = {}
    for vertex, entry in sections.get('boundary', {}).items():
        expression = _expression(entry)
        if 'x' in expression.variables:
            raise ParseError("Boundary pressures depend on t only", entry.line, entry.column)
        boundary[vertex] = expression.as_signal()
    if graph.boundary_vertices and not boundary:
        raise MissingParameter("The [boundary] section is empty but the network has boundary vertices")

    degree = overrides.get('degree')
    if degree is None:
        degree = _integer(solver['k'], 'k') if 'k' in solver else SCENARIO_DEFAULTS['degree']

    if 'elements' in solver:
        n_elements = _integer(solver['elements'], 'elements')
        meshes = {edge.id: uniform_mesh(edge.id, edge.length, n_elements) for edge in graph.edges}
        h = max(mesh.h for mesh in meshes.values())
    else:
        h = _constant(solver['h'], 'h') if 'h' in solver else SCENARIO_DEFAULTS['h']
        meshes = {edge.id: mesh_for_size(edge.id, edge.length, h) for edge in graph.edges}

    dt = overrides.get('dt')
    if dt is None:
        if 'dt' not in solver:
            raise MissingParameter("No time step: set dt in [solver] or pass --dt")
        dt = _constant(solver['dt'], 'dt')

    final_time = overrides.get('final_time')
    if final_time is None:
        final_time = _constant(solver['T'], 'T') if 'T' in solver else SCENARIO_DEFAULTS['final_time']

    integrator = overrides.get('integrator')
    if integrator is None:
        integrator = _choice(solver['integrator'], 'integrator', INTEGRATORS.values()) \
            if 'integrator' in solver else SCENARIO_DEFAULTS['integrator']

    theta = _constant(solver['theta'], 'theta') if 'theta' in solver else SOLVER_CONFIG['theta']

    hybrid = overrides.get('hybrid')
    if hybrid is None:
        hybrid = _on_off(solver['hybrid'], 'hybrid') if 'hybrid' in solver else SCENARIO_DEFAULTS['hybrid']

    initial = sections.get('initial', {})
    for key, entry in initial.items():
        if key not in ('p', 'm'):
            raise ParseError(f"Unknown initial field '{key}', expected p or m", entry.line, 1)
    initial_pressure = _field_or_constant(initial['p']) if 'p' in initial else None
    initial_flux = _field_or_constant(initial['m']) if 'm' in initial else None

    return Scenario(
        graph=graph,
        meshes=meshes,
        degree=degree,
        params=params,
        boundary=boundary,
        final_time=final_time,
        dt=dt,
        integrator=integrator,
        hybrid=hybrid,
        theta=theta,
        initial_pressure=initial_pressure,
        initial_flux=initial_flux,
        newton_tol=_constant(solver['newton_tol'], 'newton_tol') if 'newton_tol' in solver
        else SOLVER_CONFIG['newton_tol'],
        newton_max_iter=_integer(solver['newton_max_iter'], 'newton_max_iter') if 'newton_max_iter' in solver
        else SOLVER_CONFIG['newton_max_iter'],
        name=name,
    )


def load_scenario(scenario_path: str, network_path: Optional[str] = None,
                  overrides: Optional[Dict[str, Any]] = None) -> Tuple[Scenario, NetworkGraph]:
    """Read the scenario file and its network; --network takes precedence over [network] file"""
    path = Path(scenario_path)
    sections = parse_scenario_text(path.read_text(encoding='utf-8'))

    if network_path is None:
        network = sections.get('network', {}).get('file')
        if network is None:
            raise MissingParameter("No network given: use --network or [network] file = ...")
        network_path = str(path.parent / network.value)
    is_valid, error = InputValidator.validate_file_path(network_path)
    if not is_valid:
        raise MissingParameter(error)

    graph = load_network(network_path)
    return build_scenario(sections, graph, overrides, name=path.stem), graph


def parse_config(args) -> Tuple[RunConfig, Optional[Scenario]]:
    """RunConfig from parsed command line arguments, plus the scenario when the command needs one"""
    hybrid = None
    if getattr(args, 'hybrid', None) is not None:
        is_valid, hybrid, error = InputValidator.validate_on_off(args.hybrid)
        if not is_valid:
            raise ParseError(f"--hybrid: {error}")

    overrides = {
        'degree': args.k,
        'dt': args.dt,
        'final_time': args.T,
        'kind': args.model,
        'hybrid': hybrid,
        'integrator': args.integrator,
        'levels': getattr(args, 'levels', None),
        'snapshots': getattr(args, 'snapshots', None),
        'threads': getattr(args, 'threads', None),
        'study': getattr(args, 'study', None),
    }
    config = RunConfig(args.command, args.network, args.scenario, args.out, overrides)

    if config.scenario_path is None:
        if config.command != 'converge':
            raise MissingParameter(f"'{config.command}' needs --scenario")
        return config, None

    is_valid, error = InputValidator.validate_file_path(config.scenario_path)
    if not is_valid:
        raise MissingParameter(error)
    scenario, _ = load_scenario(config.scenario_path, config.network_path, overrides)
    return config, scenario
