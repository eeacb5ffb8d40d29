"""
Error hierarchy.
Every failure the library signals on purpose is a TomographyError; the CLI maps
exit_code straight to the process exit status.
"""


class TomographyError(Exception):
    """Numerical precondition failure."""
    exit_code = 3


class UsageError(TomographyError):
    """Bad input from the caller (arguments, files, specs)."""
    exit_code = 2


# -----------------------------------------------------------------------------
# Grids and filtering
# -----------------------------------------------------------------------------
class InvalidGrid(UsageError):
    pass


class GridTooCoarse(TomographyError):
    pass


class GridMismatch(TomographyError):
    pass


class BoundaryLeak(TomographyError):
    """Samples do not decay at the grid ends; support is truncated."""


# -----------------------------------------------------------------------------
# Radon / Wigner
# -----------------------------------------------------------------------------
class SupportClipped(TomographyError):
    pass


class TooFewAngles(TomographyError):
    pass


class NotNormalized(TomographyError):
    pass


class EmptyFiber(TomographyError):
    pass


class NyquistViolation(TomographyError):
    pass


# -----------------------------------------------------------------------------
# Rotated quadratures / continuous MUB
# -----------------------------------------------------------------------------
class SingularAngle(TomographyError):
    pass


class TruncationInsufficient(TomographyError):
    pass


class ShiftOutOfRange(TomographyError):
    pass


class SingularAngleInData(TomographyError):
    pass


# -----------------------------------------------------------------------------
# Qudits and states
# -----------------------------------------------------------------------------
class NotInvertible(TomographyError):
    pass


class RowNotNormalized(TomographyError):
    pass


class NegativeProbability(TomographyError):
    pass


class NotPrime(UsageError):
    pass


class WrongKind(UsageError):
    pass
