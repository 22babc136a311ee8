"""Exception types raised across the package."""


class SimulationError(Exception):
    """Base class for every error raised by hyperfiber."""


class ZeroVector(SimulationError, ValueError):
    pass


class DimensionMismatch(SimulationError, ValueError):
    pass


class NonQubitSpace(SimulationError, ValueError):
    pass


class NonHermitianObservable(SimulationError, ValueError):
    pass


class ParamOutOfRange(SimulationError, ValueError):
    pass


class IndexOutOfRange(SimulationError, IndexError):
    pass


class DuplicateTarget(SimulationError, ValueError):
    pass


class NonPolarizationInput(SimulationError, ValueError):
    pass


class UnsupportedStateShape(SimulationError, ValueError):
    pass


class NonPositiveInput(SimulationError, ValueError):
    pass


class EmptySpectrum(SimulationError, ValueError):
    pass


class InconsistentIntensities(SimulationError, ValueError):
    pass


class CalibrationOutOfRange(SimulationError, RuntimeError):
    """No time constant reproduces the requested anchor value."""


class UnknownExperiment(SimulationError, KeyError):
    pass


class InvalidOverride(SimulationError, ValueError):
    pass


class IoFailure(SimulationError, OSError):
    pass
