"""Exception hierarchy.

Every error raised deliberately by the package derives from
:class:`SingleTrackError`, so callers can catch the whole family at once.
The CLI maps :class:`InputError` subclasses to exit status 2 and
:class:`NumericalError` subclasses to exit status 3.
"""

from __future__ import annotations


class SingleTrackError(Exception):
    """Base class for all package errors."""


class InputError(SingleTrackError, ValueError):
    """Bad input data: malformed documents, invalid parameters, short logs."""


class NumericalError(SingleTrackError, ArithmeticError):
    """A model or filter operation hit a numerically undefined region."""


class NonPositiveParameter(InputError):
    def __init__(self, name: str, value: object = None):
        self.name = name
        self.value = value
        super().__init__(f"parameter {name!r} must be > 0, got {value!r}")


class ParseError(InputError):
    def __init__(self, location: str, message: str):
        self.location = location
        super().__init__(f"{location}: {message}")


class SteeringOutOfRange(InputError):
    pass


class SpeedTooLow(NumericalError):
    def __init__(self, speed: float, v_min: float):
        self.speed = speed
        self.v_min = v_min
        super().__init__(f"speed {speed:.6g} m/s below dynamic-model threshold {v_min:.6g} m/s")


class SingularDenominator(NumericalError):
    def __init__(self, which: str, value: float):
        self.which = which
        self.value = value
        super().__init__(f"{which} denominator is numerically zero ({value:.3e})")


class SingularInnovationCovariance(NumericalError):
    pass


class InconsistentLoads(InputError):
    pass


class TooFewCycles(InputError):
    pass


class DegenerateMarkers(InputError):
    pass


class TooFewSamples(InputError):
    pass


class NoSteadyWindow(InputError):
    pass


class SlipTooSmall(InputError):
    def __init__(self, axle: str, slip: float, limit: float):
        self.axle = axle
        self.slip = slip
        super().__init__(
            f"{axle} slip angle {slip:.4g} rad is below {limit:.4g} rad; "
            "drive faster or steer harder"
        )


class GridMismatch(InputError):
    pass


class EmptyTrajectory(InputError):
    pass


class ZeroPath(InputError):
    pass
