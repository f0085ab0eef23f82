"""
Configuration settings for the gas network Petrov-Galerkin simulator
"""

import os
from dotenv import load_dotenv
# Load .env variables
load_dotenv()

# Nonlinear / linear solver settings
SOLVER_CONFIG = {
    'newton_tol': float(os.getenv('GASNET_NEWTON_TOL', 1e-10)),
    'newton_max_iter': int(os.getenv('GASNET_NEWTON_MAX_ITER', 25)),
    'integrator': os.getenv('GASNET_INTEGRATOR', 'midpoint'),
    'theta': float(os.getenv('GASNET_THETA', 0.55)),
    'permc_spec': os.getenv('GASNET_PERMC_SPEC', 'COLAMD'),
}

# Quadrature settings (number of Gauss points is degree + offset)
QUADRATURE_CONFIG = {
    'assembly_extra_points': int(os.getenv('GASNET_ASSEMBLY_EXTRA_POINTS', 2)),
    'error_extra_points': int(os.getenv('GASNET_ERROR_EXTRA_POINTS', 2)),
    'projection_points': int(os.getenv('GASNET_PROJECTION_POINTS', 16)),
}

# Defaults used when a scenario file leaves a value out
SCENARIO_DEFAULTS = {
    'kind': 'linear',
    'a': 1.0,
    'b': 1.0,
    'd': 1.0,
    'area': 1.0,
    'diameter': 1.0,
    'friction_factor': 7.0,
    'sound_speed': 1.0,
    'degree': 1,
    'h': 0.1,
    'final_time': 10.0,
    'integrator': 'midpoint',
    'hybrid': False,
}

# The seven-pipe network experiment, unit pipes
NETWORK_STUDY = {
    'edges': [
        ('e1', 'v1', 'v2', 1.0),
        ('e2', 'v2', 'v3', 1.0),
        ('e3', 'v2', 'v4', 1.0),
        ('e4', 'v3', 'v4', 1.0),
        ('e5', 'v3', 'v5', 1.0),
        ('e6', 'v4', 'v5', 1.0),
        ('e7', 'v5', 'v6', 1.0),
    ],
    'boundary': {'v1': '1', 'v6': '1+0.5*sin(pi*t)'},
    'final_time': 10.0,
    'mesh_sizes': [0.1, 0.05, 0.025, 0.0125, 0.00625, 0.003125],
    # dt = h, Courant number one for the unit sound speed
    'dt_per_h': 1.0,
    # theta > 1/2 damps the checkerboard mode of the quasilinear kind
    'integrators': {'linear': 'midpoint', 'semilinear': 'midpoint', 'quasilinear': 'theta'},
    'theta': 0.55,
    'friction_ratio': 3.5,
}

# Convergence harness settings
HARNESS_CONFIG = {
    'threads': int(os.getenv('GASNET_THREADS', 1)),
    'manufactured_elements': int(os.getenv('GASNET_MMS_ELEMENTS', 4)),
    'manufactured_final_time': float(os.getenv('GASNET_MMS_FINAL_TIME', 1.0)),
    'manufactured_dt_factor': 0.5,
}

# Output formatting
OUTPUT_CONFIG = {
    'float_format': '{:.16e}',
    'flux_file': 'boundary_flux.csv',
    'snapshot_file': 'snapshots.csv',
    'steady_file': 'steady_state.csv',
    'report_stem': 'convergence_{kind}',
}

# Console display settings
CONSOLE_CONFIG = {
    'header_width': int(os.getenv('CONSOLE_HEADER_WIDTH', 60)),
    'separator_char': os.getenv('CONSOLE_SEPARATOR_CHAR', '='),
    'verbose': os.getenv('GASNET_VERBOSE', 'False').lower() == 'true',
    'progress_every': int(os.getenv('GASNET_PROGRESS_EVERY', 10)),
}

# System messages (static)
MESSAGES = {
    'welcome': '🛢️  Gas Network Petrov-Galerkin Simulator',
    'interrupted': '⚠️  Interrupted',
    'operation_failed': '❌ Operation failed',
    'steady_done': '✅ Steady state computed',
    'simulate_done': '✅ Simulation finished',
    'converge_done': '📊 Convergence study finished',
}

# Exit codes of the command line front end (static)
EXIT_CODES = {
    'OK': 0,
    'UNEXPECTED': 1,
    'USAGE': 2,
    'INPUT': 3,
    'SOLVER': 4,
}

# Model kinds (static)
MODEL_KINDS = {
    'LINEAR': 'linear',
    'SEMILINEAR': 'semilinear',
    'QUASILINEAR': 'quasilinear',
}

# Time integrators (static)
INTEGRATORS = {
    'MIDPOINT': 'midpoint',
    'BACKWARD_EULER': 'backward_euler',
    'THETA': 'theta',
}

# Degree-of-freedom layouts (static)
DOF_MODES = {
    'MONOLITHIC': 'monolithic',
    'HYBRID': 'hybrid',
}
