"""Exception types raised by the pinball pipeline."""


class PinballError(Exception):
    """Base class for all errors raised by this package."""


class NonPhysicalGeometry(PinballError, ValueError):
    pass


class InvalidWord(PinballError, ValueError):
    """Word is not a prime, canonical binary word."""


class InadmissibleOrbit(PinballError):
    """A flight chord of the candidate orbit crosses a disk."""


class NoConvergence(PinballError):
    pass


class DegenerateMonodromy(PinballError):
    """Monodromy trace does not exceed 2 in magnitude."""


class EmptyOrbitSet(PinballError, ValueError):
    pass


class MissingOrbits(PinballError):
    pass


class MissingWeight(PinballError, KeyError):
    pass


class NonSimpleZero(PinballError):
    pass


class NonPositiveFrequency(PinballError, ValueError):
    pass


class ParseError(PinballError, ValueError):
    def __init__(self, line, message=""):
        self.line = line
        super().__init__(f"line {line}: {message}" if message else f"line {line}")


class SchemaMismatch(PinballError, ValueError):
    pass


class UnknownResonance(PinballError, LookupError):
    pass


class ConfigError(PinballError, ValueError):
    pass
