"""
Configuration
=============
Settings come from the environment (optionally a local .env file) with
defaults; CLI flags override them through RunConfig.
"""

import os
import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

from dotenv import load_dotenv

from errors import InputError

logger = logging.getLogger(__name__)

load_dotenv()


def _env_int(name, default):
    value = os.getenv(name)
    if value is None or value == '':
        return default
    try:
        return int(float(value))
    except ValueError:
        raise InputError(f"{name} must be an integer, got {value!r}")


def _env_float(name, default):
    value = os.getenv(name)
    if value is None or value == '':
        return default
    try:
        return float(value)
    except ValueError:
        raise InputError(f"{name} must be a number, got {value!r}")


# Configuration
BW_LOG_DIR = os.getenv('BW_LOG_DIR', './logs')
BW_LOG_LEVEL = os.getenv('BW_LOG_LEVEL', 'WARNING').upper()
BW_MAX_DEPTH = _env_int('BW_MAX_DEPTH', 60)
BW_MAX_SUBSETS = _env_int('BW_MAX_SUBSETS', 10_000_000)
BW_JET_DEGREE = _env_int('BW_JET_DEGREE', 6)
BW_WORKERS = _env_int('BW_WORKERS', 1)
BW_SEED = _env_int('BW_SEED', 20240601)
BW_WALL_CLOCK = _env_float('BW_WALL_CLOCK', 0.0)
BW_ROUNDING = os.getenv('BW_ROUNDING', 'step').lower()

SCHEMA_VERSION = 1
LOG_FORMAT_VERSION = 1
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


@dataclass(frozen=True)
class RunConfig:
    """Effective settings of one CLI invocation"""
    subcommand: str
    inputs: Tuple[str, ...] = ()
    inequality: str = 'norm'
    max_depth: int = BW_MAX_DEPTH
    max_subsets: int = BW_MAX_SUBSETS
    wall_clock: float = BW_WALL_CLOCK
    verbosity: int = 0
    output: Optional[str] = None
    workers: int = BW_WORKERS
    seed: int = BW_SEED
    log_dir: str = field(default_factory=lambda: os.getenv('BW_LOG_DIR', BW_LOG_DIR))

    def validate(self):
        """Check budgets and output path; raise InputError on the first problem"""
        if self.max_depth <= 0:
            raise InputError(f"max depth must be positive, got {self.max_depth}")
        if self.max_subsets <= 0:
            raise InputError(f"max subsets must be positive, got {self.max_subsets}")
        if self.wall_clock < 0:
            raise InputError(f"wall clock budget must be >= 0, got {self.wall_clock}")
        if self.workers <= 0:
            raise InputError(f"worker count must be positive, got {self.workers}")
        if self.output:
            out_dir = os.path.dirname(os.path.abspath(self.output))
            if not os.path.isdir(out_dir) or not os.access(out_dir, os.W_OK):
                raise InputError(f"output directory not writable: {out_dir}")
        return self


def log_level_for(verbosity):
    """Map -v count to a logging level"""
    if verbosity >= 2:
        return logging.DEBUG
    if verbosity == 1:
        return logging.INFO
    return getattr(logging, BW_LOG_LEVEL, logging.WARNING)
