"""Exact simulation and Monte Carlo estimation for the bullet process."""

from .core import (
    Bullet,
    ConfigurationError,
    Exponential,
    FiniteSupport,
    NonMonotoneFireTime,
    PointMass,
    ProcessConfig,
    RngStream,
    TripleCollision,
    Uniform,
    generate_arrays,
    generate_sequence,
    parse_distribution,
    sample_delay,
    sample_velocity,
    validate_pair,
)
from .engine import Collision, Engine, Resolution, resolve_truncation, simulate
from .oracle import brute_resolve, catch_time

__version__ = "0.1.0"
