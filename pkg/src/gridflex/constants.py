"""Numerical tolerances and full-scale defaults shared across modules."""

# Feasibility tolerance for balance, flow limits and generator bounds (MW).
FEAS_TOL_MW = 1e-6

# Relative optimality gap accepted from the LP backend.
OPT_GAP_REL = 1e-6

# Sector weights must sum to one within this tolerance.
WEIGHT_SUM_TOL = 1e-9

# NNLS KKT tolerance on the gradient and complementarity.
KKT_TOL = 1e-8

DEFAULT_BASE_MVA = 100.0

# System-wide minimum operating reserve and interruptible trigger (MW, full system scale).
DEFAULT_P_R_MIN_MW = 2300.0
DEFAULT_INTERRUPT_THRESHOLD_MW = 3000.0
DEFAULT_SHED_STEP_MW = 25.0

KDE_GRID_POINTS = 512
# Grid half-width beyond the sample range, in bandwidths.
KDE_GRID_PAD = 4.0

SECTORS = ("residential", "business", "other")
