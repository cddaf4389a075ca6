"""Exception hierarchy shared across the package."""


class GpgmError(Exception):
    """Base class for all errors raised by :mod:`gpgm`."""


class PreconditionError(GpgmError, ValueError):
    """An operation was called with arguments violating its contract."""


class NotPSDError(PreconditionError):
    """A matrix expected to be positive semidefinite has a negative eigenvalue."""

    def __init__(self, eigenvalue, tol):
        self.eigenvalue = float(eigenvalue)
        self.tol = float(tol)
        super().__init__(
            f"matrix is not PSD: eigenvalue {self.eigenvalue:.3e} < -{self.tol:.1e}"
        )


class EigenSolverError(GpgmError):
    """The Hermitian eigensolver failed or returned an inaccurate factorization."""

    def __init__(self, message, residual=float("nan")):
        self.residual = float(residual)
        super().__init__(f"{message} (residual {self.residual:.3e})")


class GridSizeError(PreconditionError):
    """A parameter grid exceeds the configured point cap."""


class TruncationError(GpgmError):
    """Fock truncation discards more probability than allowed."""

    def __init__(self, loss, index, point):
        self.loss = float(loss)
        self.index = int(index)
        self.point = point
        super().__init__(
            f"truncation loss {self.loss:.3e} at point #{self.index} {list(point)}"
        )


class ScoreValidityError(GpgmError):
    """A score matrix is not positive semidefinite on the given grid."""


class CoverageError(GpgmError):
    """A quadrature box misses too much of the integrand's mass."""


class EnsembleValidationError(GpgmError, ValueError):
    """An ensemble violates one of its invariants.

    ``index`` identifies the offending point or state when applicable.
    """

    def __init__(self, invariant, message, index=None):
        self.invariant = invariant
        self.index = index
        where = "" if index is None else f" (index {index})"
        super().__init__(f"{invariant}{where}: {message}")


class InputError(GpgmError, ValueError):
    """A file or config could not be parsed into a valid object."""
