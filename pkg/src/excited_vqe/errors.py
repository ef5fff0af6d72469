"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Operands disagree on qubit count or vector length."""


class ResourceLimitError(RuntimeError):
    """A dense construction would exceed the configured size cap."""


class FcidumpParseError(ValueError):
    """Malformed FCIDUMP text. Carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ActiveSpaceError(ValueError):
    pass


class SectorError(ValueError):
    """Requested (N, S_z) sector is empty or too small."""


class ConsistencyError(RuntimeError):
    """An internal invariant failed (e.g. non-negligible imaginary expectation)."""


class UnsupportedError(ValueError):
    pass


class ScheduleError(ValueError):
    """Invalid VQD/SSVQE schedule."""


class RegularizationError(ValueError):
    pass


class ConfigError(ValueError):
    """Invalid experiment configuration; names the offending field."""
