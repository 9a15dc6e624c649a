"""Error taxonomy shared across the package.

The CLI maps these onto exit codes: input problems exit 2, numerical
failures exit 3, configuration problems exit 4.
"""

from __future__ import annotations


class RecselError(Exception):
    """Base class for all recsel failures."""


class InputError(RecselError):
    """Malformed or inconsistent input files."""


class NumericalError(RecselError):
    """Numerically degenerate data or a failed numerical routine."""


class ConfigError(RecselError):
    """Invalid pipeline configuration."""
