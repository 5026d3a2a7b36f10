"""Exception hierarchy shared by every eik module."""


class EIKError(Exception):
    """Base class for all errors raised by eik computations."""


class NonHermitianInput(EIKError, ValueError):
    pass


class MatrixOverflow(EIKError, OverflowError):
    pass


class ZeroState(EIKError, ValueError):
    pass


class DimensionMismatch(EIKError, ValueError):
    pass


class LengthMismatch(EIKError, ValueError):
    pass


class InvalidState(EIKError, ValueError):
    """Input violates a domain invariant (trace, positivity, normalization)."""


class Infeasible(EIKError):
    """Constraint targets cannot be met by any posterior on the prior support.

    ``diagnostic`` optionally carries the degenerate limit posterior for
    targets sitting exactly on the boundary of the attainable set.
    """

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic


class NonConvergence(EIKError):
    def __init__(self, message, residuals=None, iterations=None):
        super().__init__(message)
        self.residuals = residuals
        self.iterations = iterations


class ZeroEvidence(EIKError):
    pass


class ZeroPriorOutcome(EIKError):
    pass


class SupportViolation(EIKError):
    pass


class IncompleteKraus(EIKError, ValueError):
    pass


class StabilityViolation(EIKError, ValueError):
    pass


class SolverFailure(EIKError):
    pass


class NodeEncountered(EIKError):
    pass


class DimensionTooLarge(EIKError, ValueError):
    pass


class GridTooSmall(EIKError, ValueError):
    pass


class ZeroLikelihood(EIKError):
    pass


class ZeroSignalMass(EIKError):
    pass


class OrthogonalPostselection(EIKError):
    pass


class InsufficientSamples(EIKError, ValueError):
    pass


class DegenerateCorrespondence(EIKError, ValueError):
    pass


class ConfigInvalid(EIKError, ValueError):
    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class RegimeViolation(UserWarning):
    """Weak-measurement readout used outside its first-order validity range."""
