"""Exception types raised across the package."""


class EmacError(Exception):
    pass


class InvalidSignal(EmacError, ValueError):
    pass


class EmptySignal(EmacError, ValueError):
    pass


class ZeroReference(EmacError, ValueError):
    pass


class DimensionMismatch(EmacError, ValueError):
    pass


class OutOfRange(EmacError, IndexError):
    pass


class DuplicateObservation(EmacError, ValueError):
    pass


class EmptyObservation(EmacError, ValueError):
    pass


class EmptyFrequencies(EmacError, ValueError):
    pass


class OrderTooLarge(EmacError, ValueError):
    pass


class RankDeficient(EmacError, ValueError):
    pass


class DegeneratePoles(EmacError, ValueError):
    pass


class SeparationInfeasible(EmacError, RuntimeError):
    pass


class TooManySamples(EmacError, ValueError):
    pass
