"""
Configuration package for the gas network Petrov-Galerkin simulator
"""

from .settings import (
    SOLVER_CONFIG,
    QUADRATURE_CONFIG,
    SCENARIO_DEFAULTS,
    NETWORK_STUDY,
    HARNESS_CONFIG,
    OUTPUT_CONFIG,
    CONSOLE_CONFIG,
    MESSAGES,
    EXIT_CODES,
    MODEL_KINDS,
    INTEGRATORS,
    DOF_MODES
)

__all__ = [
    'SOLVER_CONFIG',
    'QUADRATURE_CONFIG',
    'SCENARIO_DEFAULTS',
    'NETWORK_STUDY',
    'HARNESS_CONFIG',
    'OUTPUT_CONFIG',
    'CONSOLE_CONFIG',
    'MESSAGES',
    'EXIT_CODES',
    'MODEL_KINDS',
    'INTEGRATORS',
    'DOF_MODES'
]
