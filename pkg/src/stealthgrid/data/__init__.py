"""Bundled network data files."""
