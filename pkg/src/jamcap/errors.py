"""Exception types shared across the package."""


class JamcapError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(JamcapError, ValueError):
    """A value passed to a constructor or operation is outside its domain."""


class UsageError(JamcapError, ValueError):
    """An operation was called in a state or with arguments it does not support."""


class ConfigError(JamcapError, ValueError):
    """A simulation or experiment configuration is inconsistent."""


class ConstructionError(JamcapError, RuntimeError):
    """A checked geometric construction failed its own validation."""


class InvariantViolation(JamcapError, RuntimeError):
    """A quantity the simulator maintains by construction came out wrong."""
