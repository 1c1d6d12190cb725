"""Exception types raised across the package."""


class GdickeError(Exception):
    """Base class for all package errors."""


class ModelError(GdickeError):
    """Invalid physical model definition."""


class DuplicateTransitionError(ModelError):
    """A level pair is driven by more than one mode."""


class NonMonotoneLevelsError(ModelError):
    """Level energies are not sorted in nondecreasing order."""


class BadNormalizationError(ModelError):
    """Level energies are not normalized to omega_1 = 0, omega_n = 1."""


class DegeneratePairError(ModelError):
    """A coupled level pair has zero energy splitting."""


class OrderOutOfRangeError(GdickeError):
    """A matter or field reduction order exceeds its maximum."""


class ParityMismatchError(GdickeError):
    """Requested cutoff vector is inconsistent with the parity sector."""


class BasisMismatchError(GdickeError):
    """Operator and basis belong to different models."""


class UnboundedBasisError(GdickeError):
    """No finite photon bound can be derived for a mode."""


class NoConvergenceError(GdickeError):
    """An iterative procedure exhausted its budget.

    Carries a ``diagnostics`` dict with the state of the iteration.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class InsufficientGridError(GdickeError):
    """Parameter grid too small for neighbor-fidelity analysis."""


class ConfigError(GdickeError):
    """Malformed run-configuration file."""
