"""
Constants used across the solver, the problem generators and the CLI.
"""
import os

# Algorithm defaults
DEFAULT_SIGMA1 = 1.0
DEFAULT_THETA = 1.0
DEFAULT_EPS_G = 1e-8
DEFAULT_EPS_H = 1e-4
DEFAULT_MAX_OUTER_ITERS = 500
DEFAULT_MAX_ALPHA = 60
DEFAULT_V0_NORM = 1.0
DEFAULT_SEED = 2024

# Extra seed words keep the problem data, p_0 and v_0 streams apart
PROBLEM_SEED_WORD = 0xDA7A
V0_SEED_WORD = 0x5EED

# Finite-difference step clamp
H_FLOOR = 6.0e-6  # ~ cube root of double machine epsilon
H_CEIL = 1e3

# An accepted step shorter than this ends the run
STALL_STEP_NORM = 1e-14

# Numerical kernel tolerances
SYMMETRY_TOL = 1e-10
RANK_TOL = 1e-12

# Geometry
BASIS_DISCARD_TOL = 1e-8

# Cubic subproblem
SECULAR_RTOL = 1e-12
SECULAR_MAX_ITERS = 200
HARD_CASE_RTOL = 1e-14
CG_BUDGET = 500

# Environment
SEED_ENV_VAR = 'RARC_SEED'
LOG_LEVEL_ENV_VAR = 'RARC_LOG_LEVEL'
DEFAULT_LOG_LEVEL = os.environ.get(LOG_LEVEL_ENV_VAR, 'INFO')
DEFAULT_OUT_DIR = os.environ.get('RARC_OUT_DIR', 'results')

# Output
SCHEMA_VERSION = 1
CSV_HEADER = ['k', 'f', 'g_norm', 'v_norm', 'sigma', 'alpha', 'h', 'h_clamped', 'f_evals_cum']

# Exit codes
EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NONCONVERGENCE = 3
EXIT_IO = 4

# Monitoring
PROMETHEUS_NAMESPACE = 'rarc'
