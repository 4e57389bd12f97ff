"""Command-line tools for the FoMO pipeline."""
