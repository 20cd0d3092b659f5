"""Exception hierarchy shared across the toolkit.

Two branches matter to callers: InputError means the supplied data or
arguments were invalid (the CLI exits 2), ComputationError means a
well-formed request could not be satisfied by the data or model (exit 1).
"""


class SlopeEnergyError(Exception):
    """Base class for every error raised by this package."""


class InputError(SlopeEnergyError):
    """Invalid user-supplied data, file, or argument."""


class ComputationError(SlopeEnergyError):
    """Well-formed request that the data, model, or search cannot satisfy."""


class YawAtBranchCut(ComputationError):
    """SE(2) logarithm requested within 1e-6 of the +/-pi branch cut."""


class NonMonotonicTime(InputError):
    """Timestamps are not strictly increasing."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


class OutOfBounds(InputError):
    """Queried point lies outside the terrain domain."""


class ImplausibleGravityNorm(InputError):
    """Gravity vector magnitude outside the accepted 8.0-11.5 m/s^2 band."""


class MalformedRow(InputError):
    """Telemetry CSV row that cannot be parsed."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class WindowTooShort(InputError):
    """Too few samples survived filtering to run a windowed filter."""


class NoDominantAxis(ComputationError):
    """Window has no twist component dominating the other two."""


class IllConditioned(ComputationError):
    """Design matrix condition number exceeds the configured limit."""


class InsufficientSamples(ComputationError):
    """Fewer samples than enabled basis terms for a component fit."""


class NonFinitePower(ComputationError):
    """Power evaluation left the model's sane range (extrapolation)."""


class EndpointMismatch(InputError):
    """Concatenated path parts do not connect to the whole's endpoints."""


class NoPath(ComputationError):
    """Lattice search exhausted without reaching the goal."""
