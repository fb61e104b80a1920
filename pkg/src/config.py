"""
Configuration Module for GapWiz
Centralized settings and constants to avoid hardcoding values
"""

import os
from pathlib import Path

# ==================== APPLICATION INFO ====================
APP_NAME = "GapWiz"
APP_TAGLINE = "Certified Max-Cut Integrality Gaps"
APP_DESCRIPTION = "Upper bounds and bad instances for the rank-constrained max-cut SDP"
APP_VERSION = "2.0.0"
APP_AUTHOR = "Srijan-XI"
APP_LICENSE = "MIT"

# ==================== NUMERICAL TOLERANCES ====================
DOMAIN_TOLERANCE = 1e-12        # slack allowed outside [-1, 1]
NORMALIZATION_TOLERANCE = 1e-9  # sum z(t)(1 - t) may be off by this much
UNIT_VECTOR_TOLERANCE = 1e-9
PSD_TOLERANCE = 1e-9
VALIDITY_TOLERANCE = 1e-12      # cut-polytope inequality check
DUAL_DROP_THRESHOLD = 1e-14     # smaller dual weights are dropped from certificates
MEMBERSHIP_TOLERANCE = 1e-9
TRANSFORM_TOLERANCE = 1e-9      # stored r_k against recomputed ones, relative to sum |Z|
KERNEL_SUM_TOLERANCE = 1e-6     # kernel coefficients are renormalized within this
OBJECTIVE_TOLERANCE = 1e-12     # stored bound against the recomputed dual objective

LP_DEFAULT_TOLERANCE = 1e-9
LP_MIN_TOLERANCE = 1e-12
LP_MAX_TOLERANCE = 1e-4

# HiGHS methods tried in order when a solve fails its residual check
LP_METHODS = ['highs', 'highs-ds', 'highs-ipm']

# ==================== SIZE LIMITS ====================
MAX_ENUMERATION_SIZE = 20
MAX_EXACT_MAXCUT_VERTICES = 26
MAX_MEMBERSHIP_SIZE = 16
MAX_INEQUALITY_SIZE = 20
MAXCUT_CHUNK_SIZE = 1 << 16     # assignments evaluated per numpy block
MAX_LOOP_DIMENSION = 20

# ==================== JACOBI SETTINGS ====================
DEFAULT_PRECISION = None        # None means hardware double
VERIFY_DIGITS = 50
MIN_QUADRATURE_POINTS = 16
QUADRATURE_PANEL_POINTS = 16
ENVELOPE_ROOT_DIGITS = 30

# ==================== BOUND PIPELINE ====================
EXPLORATION_DEGREE = 200
FINAL_DEGREE = 2000
DEFAULT_GRID_SIZE = 2001
GRID_TOP = 1.0 - 1e-4
DEFAULT_ROUNDS = 20
DEFAULT_FAMILIES = ['triangle', 'pentagonal', 'hypermetric7']

SEARCH_RESTARTS = 8
SEARCH_MAX_ITER = 500
VIOLATION_FACTOR = 10.0         # report violations with g < -factor * tol
MAX_VIOLATIONS_PER_ROUND = 12

# Degree columns above d: added while the dual slack at some k <= K_check is negative
DEGREE_COLUMNS_PER_PASS = 100
MAX_DEGREE_PASSES = 60

# Tail rule: allow at most this much lambda increase from the tail estimate
TAIL_BUDGET = 1e-6
ROUNDING_ALLOWANCE_ULPS = 64

# Families of valid cut-polytope inequalities, generated from b-vectors
CONSTRAINT_FAMILIES = {
    'triangle': {
        'size': 3,
        'description': 'Triangle inequalities (hypermetric with b in {+-1}^3)',
        'lead': 1,
        'max_negatives': 1,
    },
    'pentagonal': {
        'size': 5,
        'description': 'Pentagonal inequalities (hypermetric with b in {+-1}^5)',
        'lead': 1,
        'max_negatives': 2,
    },
    'hypermetric7': {
        'size': 7,
        'description': '7-point hypermetric inequalities with b in {+-1}^7',
        'lead': 1,
        'max_negatives': 3,
    },
    'hypermetric': {
        'size': 6,
        'description': 'Hypermetric inequalities with one b entry of weight 2',
        'lead': 2,
        'max_negatives': 5,
    },
}

# ==================== KERNELS ====================
ALPHA_2_CLOSED_FORM = 32.0 / (25.0 + 5.0 * 5.0 ** 0.5)
SINGLE_DEGREE_KMAX = 10
WINDMILL_ORDER = 4
MIX_INNER_GRID = 20001
MIX_LAMBDA_TOLERANCE = 1e-10
CONSTANTS_TABLE_DIMENSIONS = list(range(2, 11))

# ==================== MONTE CARLO ====================
MIN_REYNOLDS_SAMPLES = 1000
MIN_AZ_SAMPLES = 10_000
MC_CHUNK_SIZE = 100_000
DEFAULT_MC_SAMPLES = 200_000

# ==================== INSTANCES ====================
PARTITION_POLISH_STEPS = 60
DIAMETER_SAMPLES = 20_000
DIAMETER_CELL_CAP = 2000        # sampled points per cell in the pdist diameter check
HEURISTIC_RESTARTS = 16
HEURISTIC_SWEEPS = 200
ROUNDING_SAMPLES = 2000
DEFAULT_CELLS = [8, 16, 24]

# ==================== FILE FORMATS ====================
CERTIFICATE_VERSION = 1
JSON_INDENT = 2
RATIO_CSV_FIELDS = ['m', 'sdp1', 'sdp1_mode', 'sdpn', 'ratio', 'noise']
WINDMILL_CSV_FIELDS = ['t', 'gw', 'windmill', 'mixed', 'ratio_gw', 'ratio_windmill', 'ratio_mixed']
KERNEL_CSV_FIELDS = ['t', 'kernel', 'ratio']
WINDMILL_GRID_SIZE = 2001
CONSOLE_DIGITS = 6
OUTPUT_FORMATS = ['json', 'csv']

# ==================== EXIT CODES ====================
EXIT_SUCCESS = 0
EXIT_VERIFICATION_FAILURE = 1
EXIT_INVALID_INPUT = 2

# ==================== DIRECTORY PATHS ====================
# User data directory
USER_CONFIG_DIR = Path(os.environ.get('GAPWIZ_HOME', Path.home() / f".{APP_NAME.lower()}"))
HISTORY_FILE = USER_CONFIG_DIR / "run_history.json"
LOG_FILE = USER_CONFIG_DIR / "gapwiz.log"

# ==================== LOGGING SETTINGS ====================
LOG_MAX_SIZE = 10 * 1024 * 1024  # 10 MB
LOG_BACKUP_COUNT = 5
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
LOG_DATE_FORMAT = '%Y-%m-%d %H:%M:%S'
DEFAULT_LOG_LEVEL = 'WARNING'

# ==================== HISTORY SETTINGS ====================
HISTORY_MAX_ENTRIES = 1000
EXPORT_FORMATS = ['json', 'csv']
HISTORY_CSV_FIELDS = ['timestamp', 'command', 'n', 'seed', 'value', 'success', 'message']

# ==================== ERROR MESSAGES ====================
ERROR_MESSAGES = {
    'missing_seed': "A seed is required for stochastic commands (use --seed).",
    'bad_certificate': "Certificate file could not be parsed.",
    'bad_instance': "Instance file could not be parsed.",
    'verification_failed': "Certificate verification failed.",
    'unknown_family': "Unknown constraint family.",
}

# ==================== HELPER FUNCTIONS ====================
def ensure_config_dir():
    """Ensure the configuration directory exists"""
    USER_CONFIG_DIR.mkdir(parents=True, exist_ok=True)

def get_family_names():
    """Get list of supported constraint family names"""
    return list(CONSTRAINT_FAMILIES.keys())

def get_family(name):
    """Get family info by name"""
    return CONSTRAINT_FAMILIES.get(name.lower()) if name else None

def is_supported_family(name):
    """Check if a constraint family is known"""
    return get_family(name) is not None

def default_k_check(degree):
    """Degree up to which certificates are checked term by term"""
    return max(5 * int(degree), 5000)

def resolve_threads(value):
    """Clamp a --threads value to something usable"""
    if value is None or value <= 0:
        return os.cpu_count() or 1
    return int(value)

def nu_for_dimension(n):
    """Jacobi parameter for the sphere S^{n-1}"""
    return (n - 3) / 2.0
