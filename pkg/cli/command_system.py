"""
Command System for the gas network simulator
Argument parsing, command dispatch and mapping of failures to exit codes
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from config import CONSOLE_CONFIG, EXIT_CODES, HARNESS_CONFIG, INTEGRATORS, MESSAGES, MODEL_KINDS, OUTPUT_CONFIG
from core.errors import DiscretizationError, InputError, SolverError, TopologyError
from core.harness import (
    ConvergenceReport,
    report_filename,
    run_junction_manufactured,
    run_manufactured,
    run_network_study,
)
from core.timeloop import Scenario, TimeIntegrator
from cli.scenario_loader import RunConfig, parse_config
from utils.helpers import csv_writer, format_float, text_writer, write_files
from utils.validators import ValidationError

STUDIES = ('network', 'manufactured', 'junction')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='main.py',
        description='Inexact Petrov-Galerkin simulator for gas transport on pipe networks',
    )
    subparsers = parser.add_subparsers(dest='command', required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--network', help='network file (<edge_id> <tail_id> <head_id> <length> per line)')
    common.add_argument('--scenario', help='scenario file')
    common.add_argument('--out', default='.', help='output directory')
    common.add_argument('--k', type=int, help='polynomial degree of the trial space')
    common.add_argument('--dt', type=float, help='time step (simulate and steady; converge rejects it)')
    common.add_argument('--T', type=float, help='final time')
    common.add_argument('--model', choices=list(MODEL_KINDS.values()), help='model kind')
    common.add_argument('--hybrid', choices=['on', 'off'], help='hybridized coupling conditions')
    common.add_argument('--integrator', choices=list(INTEGRATORS.values()), help='time integrator')
    common.add_argument('--verbose', action='store_true', default=None, help='print progress')

    simulate = subparsers.add_parser('simulate', parents=[common], help='integrate a scenario in time')
    simulate.add_argument('--snapshots', type=int, default=0,
                          help='write the full state every N steps (0: none)')

    subparsers.add_parser('steady', parents=[common], help='compute the steady state at t = 0')

    converge = subparsers.add_parser('converge', parents=[common], help='run a convergence study')
    converge.add_argument('--levels', type=int, default=5, help='number of error rows')
    converge.add_argument('--threads', type=int, help=f"worker threads (default {HARNESS_CONFIG['threads']})")
    converge.add_argument('--study', choices=STUDIES, default='network', help='which study to run')

    return parser


class CommandSystem:
    """Runs one command and reports the outcome"""

    def __init__(self, verbose: Optional[bool] = None):
        self.verbose = CONSOLE_CONFIG['verbose'] if verbose is None else verbose

    def display_header(self):
        width = CONSOLE_CONFIG['header_width']
        separator = CONSOLE_CONFIG['separator_char'] * width
        print(separator)
        print(f"{MESSAGES['welcome']:^{width}}")
        print(separator)

    def run(self, config: RunConfig, scenario: Optional[Scenario]) -> int:
        """Dispatch the command; returns the process exit code"""
        handlers = {
            'simulate': self.run_simulate,
            'steady': self.run_steady,
            'converge': self.run_converge,
        }
        try:
            written = handlers[config.command](config, scenario)
        except SolverError as e:
            print(f"{MESSAGES['operation_failed']}: {e}", file=sys.stderr)
            return EXIT_CODES['SOLVER']
        except (TopologyError, DiscretizationError, ValidationError) as e:
            print(f"{MESSAGES['operation_failed']}: {e}", file=sys.stderr)
            return EXIT_CODES['INPUT']
        except (InputError, ValueError) as e:
            print(f"{MESSAGES['operation_failed']}: {e}", file=sys.stderr)
            return EXIT_CODES['USAGE']
        except OSError as e:
            print(f"❌ File error: {e}", file=sys.stderr)
            return EXIT_CODES['UNEXPECTED']

        if written is None:
            return EXIT_CODES['UNEXPECTED']
        for path in written:
            print(f"   📄 {path}")
        return EXIT_CODES['OK']

    def _write(self, entries) -> Optional[List[str]]:
        """Write all (path, writer) entries or none of them"""
        entries = [(str(path), writer) for path, writer in entries]
        success, errors = write_files(entries)
        if not success:
            for error in errors:
                print(f"❌ {error}", file=sys.stderr)
            return None
        return [path for path, _ in entries]

    def _snapshot_rows(self, integrator: TimeIntegrator, states) -> List[dict]:
        rows = []
        for state in states:
            for t, edge, element, node, p, m in integrator.snapshot_rows(state):
                rows.append({
                    't': format_float(t), 'edge': edge, 'element': element, 'node': node,
                    'p': format_float(p), 'm': format_float(m),
                })
        return rows

    def run_simulate(self, config: RunConfig, scenario: Scenario) -> Optional[List[str]]:
        integrator = TimeIntegrator(scenario, verbose=self.verbose)
        snapshot_every = config.override('snapshots', 0)
        trajectory = integrator.integrate(snapshot_every=snapshot_every)

        flux_rows = []
        vertices = list(trajectory.boundary_fluxes)
        for n, t in enumerate(trajectory.times):
            for vertex in vertices:
                flux_rows.append({
                    't': format_float(t), 'vertex': vertex,
                    'm': format_float(trajectory.boundary_fluxes[vertex][n]),
                })

        out_dir = Path(config.out_dir)
        entries = [(out_dir / OUTPUT_CONFIG['flux_file'], csv_writer(flux_rows, ['t', 'vertex', 'm']))]
        if snapshot_every:
            entries.append((
                out_dir / OUTPUT_CONFIG['snapshot_file'],
                csv_writer(self._snapshot_rows(integrator, trajectory.snapshots),
                           ['t', 'edge', 'element', 'node', 'p', 'm']),
            ))
        written = self._write(entries)
        if written is None:
            return None
        print(f"{MESSAGES['simulate_done']}: {len(trajectory.times) - 1} steps to T={scenario.final_time:g}")
        return written

    def run_steady(self, config: RunConfig, scenario: Scenario) -> Optional[List[str]]:
        integrator = TimeIntegrator(scenario, verbose=self.verbose)
        state = integrator.steady_state(0.0)
        written = self._write([(
            Path(config.out_dir) / OUTPUT_CONFIG['steady_file'],
            csv_writer(self._snapshot_rows(integrator, [state]), ['t', 'edge', 'element', 'node', 'p', 'm']),
        )])
        if written is None:
            return None
        print(f"{MESSAGES['steady_done']} ({state.newton_iterations} Newton iterations)")
        return written

    def run_converge(self, config: RunConfig, scenario: Optional[Scenario]) -> Optional[List[str]]:
        study = config.override('study', 'network')
        if config.override('dt') is not None:
            raise InputError("--dt has no effect on 'converge': every study derives its time step from h")
        degree = config.override('degree', 1)
        levels = config.override('levels', 5)
        threads = config.override('threads', HARNESS_CONFIG['threads'])

        if study == 'manufactured':
            report = run_manufactured(degree, levels, final_time=config.override('final_time'),
                                      threads=threads, verbose=self.verbose)
            name = f"manufactured_k{degree}"
        elif study == 'junction':
            report = run_junction_manufactured(degree, levels, hybrid=bool(config.override('hybrid', False)),
                                               final_time=config.override('final_time'),
                                               threads=threads, verbose=self.verbose)
            name = f"junction_k{degree}"
        else:
            kind = config.override('kind', scenario.params.kind if scenario is not None else MODEL_KINDS['LINEAR'])
            report = run_network_study(kind, levels, degree, threads=threads,
                                       hybrid=bool(config.override('hybrid', False)),
                                       final_time=config.override('final_time'),
                                       integrator=config.override('integrator'),
                                       verbose=self.verbose)
            name = kind

        print(report.to_text())
        written = self.write_report(report, Path(config.out_dir), name)
        if written is None:
            return None
        print(MESSAGES['converge_done'])
        return written

    def write_report(self, report: ConvergenceReport, out_dir: Path, name: str) -> Optional[List[str]]:
        return self._write([
            (out_dir / report_filename(name, '.txt'), text_writer(report.to_text())),
            (out_dir / report_filename(name, '.csv'), csv_writer(report.to_csv_rows(), ['h', 'e_h', 'eoc'])),
        ])


def run(argv: Optional[List[str]] = None) -> int:
    """Parse the command line, load inputs and run; returns the exit code"""
    args = build_parser().parse_args(argv)
    system = CommandSystem(verbose=args.verbose)
    if system.verbose:
        system.display_header()

    try:
        config, scenario = parse_config(args)
    except InputError as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_CODES['USAGE']
    except (TopologyError, DiscretizationError, ValidationError) as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_CODES['INPUT']
    except ValueError as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_CODES['USAGE']
    except OSError as e:
        print(f"❌ Cannot read input: {e}", file=sys.stderr)
        return EXIT_CODES['USAGE']

    return system.run(config, scenario)
