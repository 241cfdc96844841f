"""Exception hierarchy.

Input problems derive from :class:`InputError` (CLI exit code 2); numerical
failures derive from :class:`NumericalError` (exit code 1).
"""


class PointerSieveError(Exception):
    pass


class InputError(PointerSieveError, ValueError):
    pass


class NumericalError(PointerSieveError, ArithmeticError):
    pass


# algebra
class NotHermitian(InputError):
    pass


class DegenerateBasis(InputError):
    pass


class NotClosed(InputError):
    pass


class IndefiniteMetric(InputError):
    pass


class NotAntisymmetric(InputError):
    pass


# bath
class Divergent(NumericalError):
    pass


class NoCutoff(NumericalError):
    pass


class DivergentD0(NumericalError):
    pass


# optimizer / dynamics
class NoConvergence(NumericalError):
    pass


class StepTooLarge(NumericalError):
    pass


# spin / qbm
class BadSpin(InputError):
    pass


class OutOfRange(InputError):
    pass


class TruncationTooSmall(InputError):
    pass


class EdgeOccupation(NumericalError):
    pass


class ModelFileError(InputError):
    pass


class DegenerateFrequencies(UserWarning):
    """Two rotation blocks share a frequency; time averages are then approximate."""
