"""Colour constancy from coloured point clouds (RGB-D)."""

from .errors import PcccError, ValidationError

__version__ = "0.1.0"

__all__ = ["PcccError", "ValidationError", "__version__"]
