"""Exception taxonomy for the icdmd package.

Everything raised on purpose derives from IcdmdError so callers can catch one
base class. The split below mirrors how the CLI maps failures to exit codes:
usage-shaped problems (bad dimensions, unsupported requests, malformed config)
exit 2, math/domain failures exit 1.
"""

from __future__ import annotations


class IcdmdError(Exception):
    """Base class for all errors raised by icdmd."""


class DimensionError(IcdmdError):
    """Arguments have incompatible or nonsensical shapes/values."""


class ConstraintError(IcdmdError):
    """A constraint set is invalid or incompatible (fails validation)."""

    def __init__(self, message: str, report: object | None = None):
        super().__init__(message)
        self.report = report


class SolverError(IcdmdError):
    """A fit could not be carried out (rank deficiencies, failed checks)."""


class SpectralError(IcdmdError):
    """Eigenfunction extraction failed (null space too small, duality rank)."""


class DomainError(IcdmdError):
    """Dynamics-side failure: integration blow-up, points outside the box."""


class UnsupportedError(IcdmdError):
    """The request is recognized but deliberately out of scope."""


class ConfigError(IcdmdError):
    """An experiment or CLI configuration file is malformed."""
