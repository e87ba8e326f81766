"""
Elicitest package initializer.

Anytime-valid sequential tests and confidence sequences for elicitable and
identifiable functionals. Exports the core, betting, inference and simlab
subpackages for convenience.
"""

__version__ = "1.0.0"

__all__ = ["core", "betting", "inference", "simlab", "config", "cli"]
