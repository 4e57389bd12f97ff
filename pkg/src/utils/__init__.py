"""Utility modules shared across pipeline stages."""
