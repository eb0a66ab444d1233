"""Exception hierarchy for the engine.

Every error raised on purpose derives from EngineError so callers can
separate engine-level failures from programming bugs.
"""


class EngineError(Exception):
    """Base class for all engine errors."""


class FormatError(EngineError):
    """Bank file has a bad magic number or unsupported version."""


class ValidationError(EngineError):
    """An input violates a documented invariant (bad label, zero row, ...)."""


class IoError(EngineError):
    """Reading or writing a bank file failed at the OS level."""


class ScheduleError(EngineError):
    """Initial/increment class counts do not form a valid stage schedule."""


class ConfigError(EngineError):
    """Run configuration is missing, malformed, or contains unknown keys."""


class StateError(EngineError):
    """An accuracy-matrix cell was written twice or read before being set."""


class UndefinedMetricError(EngineError):
    """A metric was requested outside its domain (forgetting with B < 2)."""


class NumericError(EngineError):
    """Training produced a non-finite loss or parameter."""
