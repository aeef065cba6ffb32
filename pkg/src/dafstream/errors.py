class DafError(Exception):
    """Base class for all errors raised by this package."""


class TraceParseError(DafError):
    """A trace file could not be parsed."""


class ConfigError(DafError):
    """Invalid or inconsistent configuration."""


class ProtocolError(DafError):
    """Malformed header or packet framing."""


class SolverError(DafError):
    """An optimizer failed to converge."""
