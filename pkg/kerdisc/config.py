from dotenv import load_dotenv
import os
import logging

load_dotenv()

LOG_LEVEL = os.getenv("KERDISC_LOG_LEVEL", "INFO").upper()

logging.basicConfig(level=getattr(logging, LOG_LEVEL, logging.INFO), format="%(asctime)s - %(levelname)s - %(message)s")
logger = logging.getLogger("kerdisc")


def env_int(name: str, default: int, minimum: int = 1) -> int:
    """Integer setting from the environment; malformed values fall back to the default with a warning."""
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return max(minimum, int(raw))
    except ValueError:
        logger.warning(f"Ignoring {name}={raw!r}: not an integer, using {default}")
        return default


# execution
KERDISC_THREADS = env_int("KERDISC_THREADS", 1)
BLOCK_SIZE = env_int("KERDISC_BLOCK_SIZE", 1024)

# numerical tolerances
SPHERE_NORM_ATOL = 1e-9
DIRECTION_NORM_ATOL = 1e-12
COINCIDENT_ATOL = 1e-12
REPORT_EPS = 1e-6

# defaults
DEFAULT_GAMMA = 0.5
DEFAULT_STUDENT_NU = 5.0
DEFAULT_KNOTS = 17
