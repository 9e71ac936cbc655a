"""Exception types shared across the toolkit."""


class AnisolapError(Exception):
    """Base class for all toolkit errors."""


class InvalidExponentError(AnisolapError):
    """An exponent violates p > 1 (or r >= 1 for norms)."""


class SearchFailureError(AnisolapError):
    """A bracketing or bisection search failed; carries the scanned range."""

    def __init__(self, message, scanned_range=None):
        super().__init__(message)
        self.scanned_range = scanned_range


class DomainError(AnisolapError):
    """An evaluation point lies outside the admissible domain."""


class RegimeError(AnisolapError):
    """The requested construction is not covered by the exponent regime."""


class CertificationError(AnisolapError):
    """The boundary-layer negativity certificate could not be established."""


class ContainmentError(AnisolapError):
    """A box containment precondition fails."""


class ContractError(AnisolapError):
    """A field violates the boundary convention required by a check."""


class NoAdmissibleEpsilonError(AnisolapError):
    """No admissible subsolution amplitude exists (e.g. lambda <= 0)."""


class NonconvergenceError(AnisolapError):
    """An iterative solve exhausted its budget; carries the partial report."""

    def __init__(self, message, report=None, history=None):
        super().__init__(message)
        self.report = report
        self.history = history
