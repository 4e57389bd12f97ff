"""
Integration tests for the FoMO pipeline.

These tests verify end-to-end functionality across multiple modules.
"""

