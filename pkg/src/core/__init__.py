"""Core infrastructure shared by every stage: error base classes."""

from .errors import FomoError, ConfigurationError

__all__ = ["FomoError", "ConfigurationError"]
