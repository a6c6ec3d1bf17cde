"""Numerical laboratory for the wave-gauge Euler-Einstein system with Lambda > 0 on T^3."""

from .background import BackgroundParams, BackgroundState, background_at, scale_factor
from .errors import Breakdown
from .fields import FieldState
from .grid import Grid

__all__ = [
    "BackgroundParams",
    "BackgroundState",
    "Breakdown",
    "FieldState",
    "Grid",
    "background_at",
    "scale_factor",
]

__version__ = "0.1.0"
