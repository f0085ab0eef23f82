"""
Core package for the gas network Petrov-Galerkin simulator
Contains the network topology, finite element kernel, operator assembly, models and time loop
"""

from .topology import NetworkGraph, Edge, build_graph, load_network
from .fem import BasisSpec, EdgeMesh, make_basis, uniform_mesh
from .assembly import DofMap, SemidiscreteSystem, assemble, build_dofmap
from .models import GasModel, ModelParams
from .timeloop import Scenario, SimState, TimeIntegrator, Trajectory

__all__ = [
    'NetworkGraph',
    'Edge',
    'build_graph',
    'load_network',
    'BasisSpec',
    'EdgeMesh',
    'make_basis',
    'uniform_mesh',
    'DofMap',
    'SemidiscreteSystem',
    'assemble',
    'build_dofmap',
    'GasModel',
    'ModelParams',
    'Scenario',
    'SimState',
    'TimeIntegrator',
    'Trajectory',
]
