"""
Command line package for the gas network simulator
Contains the command dispatcher and the scenario file loader
"""

from .command_system import CommandSystem, build_parser, run
from .scenario_loader import RunConfig, load_scenario, parse_config

__all__ = [
    'CommandSystem',
    'build_parser',
    'run',
    'RunConfig',
    'load_scenario',
    'parse_config',
]
