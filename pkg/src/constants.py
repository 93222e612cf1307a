# File: constants.py

# --- Package Metadata ---
PACKAGE_NAME = "markov-quantization"
SCHEMA_VERSION = "1.0"

# --- Model Validation ---
# Absolute tolerance for row sums of P and the sum of chi
STOCHASTIC_TOLERANCE = 1e-12
MIN_OUT_DEGREE = 2

# --- Spectral Settings (Defaults) ---
RADIUS_TOLERANCE = 1e-12          # relative gap of the Collatz-Wielandt bounds
ROOT_TOLERANCE = 1e-10            # bracket width in s when bisection stops
MAX_POWER_ITERATIONS = 200000
CRITICAL_TOLERANCE = 1e-9         # s_r(H) >= s_r - tol marks H critical
SUBCRITICAL_PROBE = 1e-9          # Psi(probe) < 1 means the root is 0
MAX_BRACKET_DOUBLINGS = 64

# --- Antichain Settings (Defaults) ---
CAPACITY_CAP = 10 ** 8            # streamed (sums only) above this phi
MATERIALIZE_CAP = 4 * 10 ** 6     # word arrays are only built below this phi
TIE_GUARD = 1e-9                  # log-space band resolved in exact arithmetic

# --- Quantization Settings (Defaults) ---
DEPTH_OFFSET = 6
LLOYD_MAX_ITER = 200
LLOYD_TOLERANCE = 1e-9
TERNARY_TOLERANCE = 1e-12
MONTE_CARLO_SAMPLES = 10 ** 6
MONTE_CARLO_MIN_LENGTH = 1e-15
DEFAULT_SEED = 12345
TEMPLATE_SPACING = 2.0            # template i occupies [2(i-1), 2(i-1)+1]

# --- Verification Bands (Defaults) ---
BAND_LIMIT = 3.0
GROWTH_BAND_LIMIT = 2.0
DEPTH_RATIO_LIMIT = 3.0
ROW_SUM_H_MAX = 64
ROW_SUM_SLACK = 1e-9
TRANSIENT_N_MIN = 10
TRANSIENT_N_MAX = 60
SLOPE_RELATIVE_TOLERANCE = 0.10
