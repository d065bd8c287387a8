"""Configuration settings for the discrete Morrey space toolkit."""
import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

# Base paths
BASE_DIR = Path(__file__).parent.parent
DATA_DIR = BASE_DIR / "data"
DATABASE_DIR = BASE_DIR / "database"
OUTPUT_DIR = Path(os.getenv("MORREY_OUTPUT_DIR", str(BASE_DIR / "output")))
BASELINE_DIR = DATA_DIR / "baselines"

# Database settings (run ledger)
DATABASE_URL = os.getenv("MORREY_DATABASE_URL", f"sqlite:///{DATABASE_DIR}/runs.db")

# Memory guard: maximum number of dense cells in any box or window
CELL_LIMIT = int(os.getenv("MORREY_CELL_LIMIT", str(10**8)))

# Worker threads for ensembles and fields
DEFAULT_THREADS = int(os.getenv("MORREY_THREADS", "1"))

# Logging
LOG_LEVEL = os.getenv("MORREY_LOG_LEVEL", "INFO")

# Window margins and stabilization tolerances
DEFAULT_MARGIN = 16
MAXIMAL_STABILIZATION_RTOL = 1e-9
RIESZ_STABILIZATION_RTOL = 1e-6

# Baseline pinning
BASELINE_RTOL = 1e-9

# Seeding
DEFAULT_SEED = 0
MAX_SEED = 2**64 - 1
