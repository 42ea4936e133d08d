import os

from dotenv import load_dotenv

load_dotenv()

# Numerical tolerances
RANK_TOL = float(os.getenv("DOBS_RANK_TOL", "1e-10"))  # relative singular-value cutoff for rank decisions
CHECK_TOL = float(os.getenv("DOBS_CHECK_TOL", "1e-9"))  # residual bound for algebraic identity checks
PLACEMENT_TOL = float(os.getenv("DOBS_PLACEMENT_TOL", "1e-6"))  # achieved vs requested eigenvalues

# Iteration caps for q / p / p_bar searches
Q_CAP = int(os.getenv("DOBS_Q_CAP", "1000000"))

# Simulation
OVERFLOW_LIMIT = float(os.getenv("DOBS_OVERFLOW_LIMIT", "1e12"))  # abort when ||x|| exceeds this
RATE_SLACK = float(os.getenv("DOBS_RATE_SLACK", "0.05"))  # measured rate may exceed lambda by this much
DEFAULT_SEED = int(os.getenv("DOBS_DEFAULT_SEED", "0"))

# Spectrum assignment: "robust" (Tits-Yang) or "ackermann"
PLACEMENT = os.getenv("DOBS_PLACEMENT", "robust").lower()

# Output
OUTPUT_DIR = os.getenv("DOBS_OUTPUT_DIR", "output")
LOG_LEVEL = os.getenv("DOBS_LOG_LEVEL", "INFO").upper()
