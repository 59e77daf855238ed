"""
Errors Module

Exception types raised by the simulator. Configuration problems derive from
ValueError so callers that only catch ValueError keep working.
"""

from typing import Optional


class CournotGAError(Exception):
    """Base class for all simulator errors."""


class ConfigurationError(CournotGAError, ValueError):
    """
    Invalid shapes, lengths, sizes or unparseable configuration.

    Args:
        message: Human readable description
        line: 1-based line of the offending key in a config file, if known
        key: Name of the offending config key, if known
    """

    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None):
        self.line = line
        self.key = key
        self.detail = message
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnsupportedConfigurationError(ConfigurationError):
    """A configuration that is well formed but not supported (e.g. odd chromosome length)."""


class ModelParameterError(CournotGAError, ValueError):
    """Market parameters for which the equilibrium solver cannot bracket a solution."""


class TraceError(CournotGAError):
    """
    Failure while writing or reading a run trace.

    Args:
        message: Human readable description
        generation: Generation index at which the failure happened
    """

    def __init__(self, message: str, generation: Optional[int] = None):
        self.generation = generation
        if generation is not None:
            message = f"generation {generation}: {message}"
        super().__init__(message)


class ReplicationCheckError(CournotGAError):
    """One or more replication checks fell outside their acceptance bounds."""
