"""Numerical workbench for weighted Morrey-space estimates."""

__version__ = "0.1.0"
