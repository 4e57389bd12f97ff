"""
Base exceptions for the consolidation pipeline.

Each stage defines its own subclasses next to its code; everything raised
on purpose by this package derives from FomoError.
"""


class FomoError(Exception):
    """Base exception for pipeline errors."""
    pass


class ConfigurationError(FomoError, ValueError):
    """A configuration value is out of its valid range."""
    pass
