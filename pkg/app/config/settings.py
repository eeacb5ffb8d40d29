"""
Application configuration and settings.
Centralized environment variables and numerical defaults.
"""
import os
from dotenv import load_dotenv

load_dotenv()

# -----------------------------------------------------------------------------
# Environment
# -----------------------------------------------------------------------------
# ENV controls environment-specific behavior:
# - dev  : local work, INFO logging
# - ci   : verification runs, WARNING logging
# - prod : batch reconstructions, WARNING logging
ENV = os.getenv("ENV", "dev").lower()

LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO" if ENV == "dev" else "WARNING").upper()

# -----------------------------------------------------------------------------
# Parallelism
# -----------------------------------------------------------------------------
# Caps the worker threads used for per-angle / per-row maps.
TOMOKIT_THREADS = max(1, int(os.getenv("TOMOKIT_THREADS", str(os.cpu_count() or 1))))

# -----------------------------------------------------------------------------
# Default sampling grid (dimensionless coordinates, hbar = 1)
# -----------------------------------------------------------------------------
GRID_MIN = float(os.getenv("GRID_MIN", "-8.0"))
GRID_MAX = float(os.getenv("GRID_MAX", "8.0"))
GRID_N = int(os.getenv("GRID_N", "257"))

DEFAULT_ANGLES = int(os.getenv("DEFAULT_ANGLES", "90"))

# -----------------------------------------------------------------------------
# Principal-value filtering
# -----------------------------------------------------------------------------
# epsilon = EPSILON_FACTOR * offset spacing unless given explicitly.
EPSILON_FACTOR = float(os.getenv("EPSILON_FACTOR", "0.05"))
FFT_PADDING = int(os.getenv("FFT_PADDING", "4"))
MIN_PROFILE_LENGTH = 8
MIN_ANGLES = 8

# -----------------------------------------------------------------------------
# Tolerances
# -----------------------------------------------------------------------------
# Relative to max |samples|.
BOUNDARY_TOLERANCE = float(os.getenv("BOUNDARY_TOLERANCE", "1e-3"))
SUPPORT_TOLERANCE = float(os.getenv("SUPPORT_TOLERANCE", "1e-6"))

DENSITY_NORMALIZATION_TOLERANCE = 1e-6
ROW_NORMALIZATION_TOLERANCE = 1e-4
SAMPLED_ROW_TOLERANCE = 1e-3
WIGNER_NORMALIZATION_TOLERANCE = 1e-4
NEGATIVITY_TOLERANCE = 1e-8

HERMITIAN_TOLERANCE = 1e-12
TRACE_TOLERANCE = 1e-6
PSD_TOLERANCE = 1e-8

QUDIT_TRACE_TOLERANCE = 1e-12
QUDIT_EIGEN_TOLERANCE = 1e-10
PROBABILITY_ROW_TOLERANCE = float(os.getenv("PROBABILITY_ROW_TOLERANCE", "1e-6"))

# -----------------------------------------------------------------------------
# Interpolation
# -----------------------------------------------------------------------------
# 1 = bilinear line integrals; 3 = cubic spline sampling.
INTERPOLATION_ORDER = int(os.getenv("INTERPOLATION_ORDER", "1"))

# -----------------------------------------------------------------------------
# Rotated quadratures / oscillator basis
# -----------------------------------------------------------------------------
SINGULAR_SIN_THRESHOLD = 1e-8
OSCILLATOR_NMAX = int(os.getenv("OSCILLATOR_NMAX", "60"))
MEHLER_TAIL_TOLERANCE = float(os.getenv("MEHLER_TAIL_TOLERANCE", "1e-6"))

# -----------------------------------------------------------------------------
# Density-matrix reconstruction
# -----------------------------------------------------------------------------
# Angles with |sin(theta)| below the cutoff are excluded (or rejected).
SINGULAR_ANGLE_CUTOFF = float(os.getenv("SINGULAR_ANGLE_CUTOFF", "1e-3"))
# Upper bound on |t| for the per-angle characteristic functions.
DM_MAX_FREQUENCY = float(os.getenv("DM_MAX_FREQUENCY", "16.0"))

# -----------------------------------------------------------------------------
# Qudits
# -----------------------------------------------------------------------------
MAX_PRIME = int(os.getenv("MAX_PRIME", "101"))

# -----------------------------------------------------------------------------
# Artifacts
# -----------------------------------------------------------------------------
ARTIFACT_DIR = os.getenv("ARTIFACT_DIR", "artifacts")
FLOAT_FORMAT = "%.17g"
PGM_BITS = int(os.getenv("PGM_BITS", "16"))
