"""Exception types shared across the toolkit."""


class SchmlabError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(SchmlabError):
    """Malformed input: bad shapes, broken invariants, unreadable files."""


class DimensionLimitError(ValidationError):
    """An operation would exceed the configured dimension cap."""


class NumericError(SchmlabError):
    """Numerical failure: non-convergence or a residual above tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class TruncationDegenerateError(ValidationError):
    """Truncation projectors capture numerically none of the state."""


class FilterDegenerateError(ValidationError):
    """A local filter annihilates the state vector."""


class WitnessDegenerateError(NumericError):
    """Witness margin collapsed: the target's kernel is approachable by
    low-Schmidt-rank states, so the kernel-projector construction fails."""


class ReferenceStateError(ValidationError):
    """Choi reference state is rank deficient or has the wrong marginal."""
