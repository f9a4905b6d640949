"""
Runtime settings read from the environment (and an optional .env file)
"""

import os
import logging
from typing import Dict, Optional

from pydantic import BaseModel, Field, ValidationError
from dotenv import load_dotenv

from quermass_lab.errors import ConfigError

load_dotenv()

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# environment variable -> settings field
ENV_FIELDS: Dict[str, str] = {
    "QMC_THREADS": "threads",
    "QMC_CHUNK_SIZE": "chunk_size",
    "QMC_EXACT_TOL": "exact_tol",
    "QMC_SIGMA": "mc_sigma",
    "QMC_MAX_ITER": "projection_max_iter",
    "QMC_LOG_LEVEL": "log_level",
}


class ToolkitSettings(BaseModel):
    """Process-wide knobs for parallelism, tolerances and logging"""
    threads: int = Field(default_factory=lambda: os.cpu_count() or 1, ge=1,
                         description="Worker threads for Monte-Carlo chunks and campaigns")
    chunk_size: int = Field(default=65536, ge=1024, description="Samples per Monte-Carlo chunk")
    exact_tol: float = Field(default=1e-9, gt=0, description="Relative tolerance for exact routes")
    mc_sigma: float = Field(default=3.0, gt=0, description="Sigma multiplier for Monte-Carlo tolerances")
    projection_max_iter: int = Field(default=10000, ge=1, description="Iteration cap of the hull projection solver")
    log_level: str = Field(default="WARNING", description="Root log level for the CLI")


def load_settings(environ: Optional[Dict[str, str]] = None) -> ToolkitSettings:
    """Build settings from QMC_* environment variables"""

    environ = os.environ if environ is None else environ
    values = {}
    for var, field in ENV_FIELDS.items():
        raw = environ.get(var)
        if raw is not None and raw.strip():
            values[field] = raw.strip()

    try:
        return ToolkitSettings(**values)
    except ValidationError as e:
        err = e.errors()[0]
        field = err["loc"][0] if err["loc"] else "?"
        var = next((v for v, f in ENV_FIELDS.items() if f == field), field)
        raise ConfigError(f"{var}: {err['msg']}") from e


def configure_logging(level: str = "WARNING") -> None:
    """Install a single stream handler on the root logger"""

    numeric = logging.getLevelName(level.upper())
    if not isinstance(numeric, int):
        raise ConfigError(f"QMC_LOG_LEVEL: unknown level {level!r}")
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(numeric)
