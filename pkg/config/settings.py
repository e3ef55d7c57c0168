import math
import os
from pathlib import Path

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Base paths
BASE_DIR = Path(__file__).resolve().parent.parent
OUTPUT_DIR = os.environ.get('NCT_OUTPUT_DIR', os.path.join(BASE_DIR, 'output'))
DEFAULT_CONFIG_PATH = os.path.join(BASE_DIR, 'config', 'default_run.conf')

TOOL_VERSION = '1.0.0'

# Parallelism cap for independent per-spin / per-pair jobs
MAX_WORKERS = max(1, int(os.environ.get('NCT_SPIN_THREADS', os.cpu_count() or 1)))

# Run defaults
DEFAULT_N_MAX = 6
DEFAULT_LAMBDA_TURNS = (math.sqrt(5) - 1) / 2
DEFAULT_TAU1 = 1 + 0j
DEFAULT_TAU2 = 1j
DEFAULT_TAU0 = 0j
DEFAULT_EPS_CONST = 0j
DEFAULT_TOLERANCE = 1e-12

# Tolerances
HOCHSCHILD_TOLERANCE = 1e-10
DEDUP_TOLERANCE = 1e-9
INTERTWINER_TOLERANCE = 1e-10
HERMITIAN_TOLERANCE = 1e-12
JACOBI_TOLERANCE = 1e-14
JACOBI_MAX_SWEEPS = 50
DEGENERACY_TOLERANCE = 1e-12
RATIONAL_MAX_DENOMINATOR = 1000

# Classification
DEFAULT_SHIFT_WINDOW = 3

# Resolvent diagnostics
RESOLVENT_N_MAX_VALUES = (4, 6, 8)
DEFAULT_RADII = (1.0, 1.5, 2.0)
BOUNDED_GROWTH_SLACK = 0.1

# Check depths, before the reflection margin of half-integer lattices
TORUS_RELATION_DEPTH = 2
EQUIVARIANCE_DEPTH = 1
ZEROTH_ORDER_DEPTH = 2
FIRST_ORDER_DEPTH = 3
HOCHSCHILD_DEPTH = 4
SCAN_DEPTH = 3
