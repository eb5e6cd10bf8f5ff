"""Exception hierarchy shared by all modules."""


class MarylandError(Exception):
    """Base class for errors raised by this package."""


class SingularPhase(MarylandError, ValueError):
    """A lattice phase sits within the guard distance of a tangent pole."""

    def __init__(self, message, site=None, distance=None):
        super().__init__(message)
        self.site = site
        self.distance = distance


class RationalInput(MarylandError, ValueError):
    pass


class EmptyCoefficients(MarylandError, ValueError):
    pass


class InsufficientConvergents(MarylandError, ValueError):
    pass


class TrivialInitial(MarylandError, ValueError):
    pass


class WindowTooWide(MarylandError, ValueError):
    pass


class DegenerateRoots(MarylandError, ArithmeticError):
    pass


class DuplicateNodes(MarylandError, ValueError):
    pass


class KTooSmall(MarylandError, ValueError):
    pass


class SingularDenominator(MarylandError, ArithmeticError):
    """The box determinant vanishes to working resolution (E is a box eigenvalue)."""


class BoxTooSmall(MarylandError, ValueError):
    pass


class ConfigError(MarylandError, ValueError):
    pass
