"""String constants and numerical defaults for lnamor.

These constants define the canonical tags written to reports and the
tolerances shared by the numerical modules.
"""

VERSION = "0.1.0"

# Gramian provenance
EQUATION = "equation"
SDP = "sdp"
HMATRIX_SEEDED_SDP = "hmatrix_seeded_sdp"
PROVENANCES = {EQUATION, SDP, HMATRIX_SEEDED_SDP}

# Sparsity block kinds
DIAGONAL = "diagonal"
FULL = "full"
BLOCK_KINDS = {DIAGONAL, FULL}

# Reduction method tags (as recorded in results)
BT = "bt"
BSP = "bsp"
STRUCTURED_BT = "structured_bt"
STRUCTURED_BSP = "structured_bsp"
STRUCTURED_H2 = "structured_h2"
TIMESCALE = "timescale"
TRUNCATION_METHODS = {BT, STRUCTURED_BT}
PERTURBATION_METHODS = {BSP, STRUCTURED_BSP, STRUCTURED_H2}

# Method names accepted on the command line
CLI_STRUCTURED_BT = "structured-bt"
CLI_STRUCTURED_BSP = "structured-bsp"
CLI_H2 = "h2"
CLI_TIMESCALE = "timescale"
CLI_METHODS = {
    CLI_STRUCTURED_BT: STRUCTURED_BT,
    CLI_STRUCTURED_BSP: STRUCTURED_BSP,
    CLI_H2: STRUCTURED_H2,
    CLI_TIMESCALE: TIMESCALE,
}

# Commands
ANALYZE = "analyze"
REDUCE = "reduce"
VALIDATE = "validate"
SIMULATE = "simulate"
COMMANDS = {ANALYZE, REDUCE, VALIDATE, SIMULATE}

# Linear algebra
STABILITY_MARGIN = 1e-12
ABSOLUTE_FLOOR = 1e-14
LYAPUNOV_RESIDUAL = 1e-9
SYMMETRY_TOLERANCE = 1e-12

# Matrix classes
H_EIGEN_TOLERANCE = 1e-10
POSITIVITY_THRESHOLD = 1e-12
SINGULAR_THRESHOLD = 1e-12

# Steady state
NEWTON_MAX_ITERATIONS = 200
NEWTON_MAX_HALVINGS = 40
NEWTON_TOLERANCE = 1e-12
FAST_ROOT_TOLERANCE = 1e-10

# Structured Gramian programme
SDP_SLACK = 1e-8
SDP_EIGEN_FLOOR = 1e-10
SDP_TOLERANCE = 1e-7
SDP_MAX_OUTER = 50
SDP_MAX_NEWTON = 100
SDP_BARRIER_DECREASE = 10.0
SDP_TRACE_CAP = 1e8
SEED_INFLATION = 1e-3

# Balancing and reduction
HANKEL_GAP = 1e-8
BALANCE_TOLERANCE = 1e-8
DC_MATCH_TOLERANCE = 1e-8
PROJECTION_TOLERANCE = 1e-10

# Integration
RTOL = 1e-9
ATOL = 1e-12
STIFF_EVALUATION_BUDGET = 50_000
# Fraction of the horizon below which an explicit step counts as collapsed
MIN_STEP_FRACTION = 1e-12
PSD_FLOOR = 1e-10

# Norms
HINF_TOLERANCE = 1e-6
HINF_MAX_ITERATIONS = 60
IMAGINARY_AXIS_TOLERANCE = 1e-8
GRID_MIN_FREQUENCY = 1e-4
GRID_MAX_FREQUENCY = 1e4
GRID_POINTS = 2048
H2_QUADRATURE_TOLERANCE = 1e-3

# Exit codes
EXIT_CONFIG = 1
EXIT_MODEL = 2
EXIT_INFEASIBLE = 3
EXIT_HANKEL_TIE = 4

# Output layout
ANALYSIS_FILE = "analysis.json"
REDUCTION_FILE = "reduction_{method}.json"
SIGMA_FILE = "sigma.csv"
VALIDATE_TABLE_FILE = "validate_table.csv"
COV_ERROR_FILE = "cov_error_{i}_{j}.csv"
SWEEP_CSV_FILE = "epsilon_sweep.csv"
SWEEP_JSON_FILE = "epsilon_sweep.json"
TRAJECTORY_FILE = "trajectory.csv"
TRAJECTORY_EM_FILE = "trajectory_em.csv"
