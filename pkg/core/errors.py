"""
Domain errors raised by the simulator core
Grouped by family so the command line front end can map them to exit codes
"""

from typing import Optional


class GasNetworkError(Exception):
    """Root of all simulator errors"""


# Topology -------------------------------------------------------------------

class TopologyError(GasNetworkError):
    """Invalid pipe network description"""


class EmptyGraph(TopologyError):
    pass


class NonpositiveLength(TopologyError):
    pass


class SelfLoop(TopologyError):
    pass


class Disconnected(TopologyError):
    pass


class UnknownVertex(TopologyError):
    pass


# Discretization ---------------------------------------------------------------

class DiscretizationError(GasNetworkError):
    """Invalid mesh, degree or model parameter"""


class DegreeZero(DiscretizationError):
    pass


class MissingMesh(DiscretizationError):
    pass


class MeshMismatch(DiscretizationError):
    pass


class NonpositiveCoefficient(DiscretizationError):
    pass


class NegativeFriction(DiscretizationError):
    pass


class NonpositiveDensity(DiscretizationError):
    pass


# Solver -----------------------------------------------------------------------

class SolverError(GasNetworkError):
    """Failure while solving a discrete system"""


class NewtonDiverged(SolverError):
    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"Newton iteration stopped after {iterations} iterations "
            f"with residual {residual:.3e}"
        )


class SingularSystem(SolverError):
    pass


class VacuumState(SolverError):
    """Density is not positive at some quadrature point"""


# Input files ------------------------------------------------------------------

class InputError(GasNetworkError):
    """Invalid scenario, network file or command line input"""


class ParseError(InputError):
    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        location = ""
        if line is not None:
            location = f" (line {line}" + (f", column {column})" if column is not None else ")")
        elif column is not None:
            location = f" (column {column})"
        super().__init__(f"{message}{location}")


class UnknownVertexInBoundaryCondition(InputError):
    pass


class MissingParameter(InputError):
    pass
