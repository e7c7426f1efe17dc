"""
Runtime defaults for the SG flow engine.

Values can be overridden from the environment (a .env file is honoured).
"""

import os

from dotenv import load_dotenv

load_dotenv()

# Output locations
OUTPUT_DIR = os.getenv("SGFLOW_OUTPUT_DIR")
LOG_DIR = os.getenv("SGFLOW_LOG_DIR", "logs")
LOG_LEVEL = os.getenv("SGFLOW_LOG_LEVEL", "INFO")

# Weight solver
DEFAULT_MAX_NEWTON_ITER = int(os.getenv("SGFLOW_MAX_NEWTON_ITER", "100"))
DEFAULT_MAX_BACKTRACKS = int(os.getenv("SGFLOW_MAX_BACKTRACKS", "50"))
CG_THRESHOLD = int(os.getenv("SGFLOW_CG_THRESHOLD", "500"))  # reduced size above which CG is used
CG_RTOL = 1e-12

# Geometry tolerances, relative to the domain scale
VERTEX_TOL = 1e-12  # x diameter(domain)
SLIVER_AREA_TOL = 1e-14  # x area(domain)
INTERFACE_TOL = 1e-12  # x diameter(domain)
COINCIDENT_TOL = 1e-12  # x diameter(domain)
SEPARATION_FLOOR = 1e-8  # x diameter(domain)

# Diagram construction
DIAGRAM_WORKERS = int(os.getenv("SGFLOW_WORKERS", "1"))
NEIGHBOUR_BATCH = 16

# Quadrature subdivision level for non-uniform densities
QUADRATURE_LEVEL = 2
