# Experiment Configuration
# Edit these settings to change the defaults used by the CLI and run_experiment

# ===========================================
# Noise Regimes
# ===========================================

# Observational noise standard deviation is eps**c.
# "small": c = 3/2, eps = 0.01 gives std 0.001
# "order_one": c = 0, eps only enters the prior
NOISE_REGIMES = {
    "small": {"c": 1.5, "eps": 0.01},
    "order_one": {"c": 0.0, "eps": 0.01},
}

DEFAULT_NOISE_REGIME = "small"

# Gap a = 3 + 2(a1 - a3) > 0 fed to the scaling resolver for phase-field runs
SCALING_GAP = {
    "small": 3.0,      # a1 = 0, a3 = 0
    "order_one": 2.0,  # a1 = -3/2, a3 = -1
}

# ===========================================
# Prior Parameter Rows
# ===========================================

# (method, regime) -> parameters not fixed by the resolver.
# Level set rows ignore the scaling relations; a1..a3 and b are copied from
# the small-noise phase-field row.
PRIOR_PRESETS = {
    ("phase_field", "small"): {"delta": 0.01, "q": 0.1, "tau": 1.0, "r": 1.0, "alpha": 2.0},
    ("phase_field", "order_one"): {"delta": 100.0, "q": 0.1, "tau": 1.0, "r": 1.0, "alpha": 2.0},
    ("level_set", "small"): {"delta": 1.0, "q": 0.0, "tau": 50.0, "r": 1.0, "alpha": 2.0},
    ("level_set", "order_one"): {"delta": 1.0, "q": 0.0, "tau": 50.0, "r": 1.0, "alpha": 2.0},
    # GP regression is the r = 0 phase-field posterior
    ("gp", "small"): {"delta": 1.0, "q": 0.0, "tau": 50.0, "r": 0.0, "alpha": 2.0},
    ("gp", "order_one"): {"delta": 100.0, "q": 0.1, "tau": 1.0, "r": 0.0, "alpha": 2.0},
}

METHODS = ("phase_field", "level_set", "gp")

# ===========================================
# pCN Settings
# ===========================================

# Level set acceptance at small noise falls roughly like exp(-110 beta)
DEFAULT_BETA = {
    "phase_field": 0.01,
    "level_set": 0.02,
}

# Usual ranges; values outside trigger a warning
BETA_BANDS = {
    "phase_field": (0.002, 0.02),
    "level_set": (0.02, 0.1),
}

ACCEPTANCE_WINDOW = 1000  # moving window for acceptance rates
STABILITY_SMOOTHING = 10  # windows averaged before testing for stability
STABILITY_ABS_TOL = 0.002  # two acceptances per window
DEFAULT_THIN = 100        # stored-sample thinning
PROGRESS_LOG_EVERY = 10000

# ===========================================
# Scale Settings
# ===========================================

DESK_SCALE = {"grid_size": 128, "steps": 100000}
PAPER_SCALE = {"grid_size": 128, "steps": 1000000}  # 2**14 grid points

# Truth meshes: 2**16 points for A and B, 320**2 for C
TRUTH_GRID_SIZES = {"A": 256, "B": 256, "C": 320}

SUPPORTED_GRID_SIZES = (8, 16, 32, 64, 128, 256, 512, 1024, 2048)

# ===========================================
# Observation Layouts
# ===========================================

UNIFORM_LAYOUT_PER_AXIS = 15   # 15 x 15 = 225 points for truths A and B
RANDOM_LAYOUT_POINTS = 50      # truth C
WINDOW_CELLS = 2               # averaging window side, in inversion grid cells

# ===========================================
# Truth Geometries
# ===========================================

TRUTH_A = {"center": (0.5, 0.5), "radius": 0.25}

TRUTH_B = {
    "ellipse": {"center": (0.35, 0.55), "semi_axes": (0.22, 0.13), "angle_deg": 30.0},
    "discs": [
        {"center": (0.75, 0.25), "radius": 0.08},
        {"center": (0.72, 0.78), "radius": 0.10},
    ],
}

TRUTH_C = {"scale": 0.1}  # checkerboard cell side

# ===========================================
# Output Settings
# ===========================================

OUTPUT_ROOT_ENV = "BINVERSE_OUT"
LOG_LEVEL_ENV = "BINVERSE_LOG_LEVEL"
DEFAULT_OUTPUT_ROOT = "runs"
RUN_NAME_MAX_LENGTH = 60
CSV_SIGNIFICANT_DIGITS = 17

# ===========================================
# Energy / Gamma-Limit Settings
# ===========================================

PROFILE_HALF_WIDTH = 10.0
PROFILE_NODES = 2048
PROFILE_BOUNDARY_PENALTY = 1.0e3
PROFILE_START_WIDTHS = (0.5, 1.0, 2.0)
PROFILE_MAX_ITER = 5000
PROFILE_DECREMENT_TOL = 1.0e-9  # Newton decrement, relative to the energy

GAMMA_EPS_LADDER = (0.08, 0.04, 0.02)
GAMMA_GRID_SIZE = 1024
GAMMA_PARAMS = {"delta": 0.01, "q": 0.1, "tau": 1.0, "r": 1.0, "c": 1.5, "a": 3.0}

INTERFACE_ALPHAS = (1.5, 2.0, 3.0)
INTERFACE_GRID_SIZES = (64, 128, 256, 512, 1024)
