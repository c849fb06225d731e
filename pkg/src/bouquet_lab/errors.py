"""Exception types.  Each maps onto a CLI exit code in :mod:`cli`."""


class BouquetError(Exception):
    """Base class."""


class ParameterError(BouquetError, ValueError):
    """Invalid family or scheme parameters."""


class FamilyOverflowError(BouquetError, OverflowError):
    """A term exp(omega_k z) does not fit in a double; use the log-scale API."""


class InvariantViolation(BouquetError):
    """A sampled geometric or analytic invariant failed."""


class NonConvergence(BouquetError):
    """An iteration did not settle within its budget."""


class BranchViolation(BouquetError):
    """An inverse-branch iterate left the half-strip it belongs to."""


class BoundaryError(BouquetError):
    """The point lies on a strip boundary Im z = (2k+1)pi."""


class ZeroOnContour(BouquetError):
    """A zero of f sits (numerically) on the contour."""


class NonIntegerWinding(BouquetError):
    """Accumulated argument change is not close to a multiple of 2pi."""


class NoSignChange(BouquetError):
    """Bracket endpoints have the same sign."""


class MultipleSignChanges(BouquetError):
    """More than one sign change inside a bracket."""


class EmptyTrapezium(BouquetError):
    """c too small for the trapezium to be a quadrilateral."""


class RTooSmall(BouquetError):
    """Escape radius with M(R) <= R."""


class CoverageViolation(BranchViolation):
    """A periodic-orbit point left the half-strip of its symbol."""
