"""Exception types shared across the package.

Everything raised deliberately by causalis derives from :class:`CausalisError`,
so callers (and the CLI, which maps these to exit code 2) can catch one type.
Solver breakdowns get their own branch because they map to exit code 3.
"""


class CausalisError(Exception):
    """Base class for all errors raised by causalis."""


class DuplicateLabelError(CausalisError):
    """Two tensor factors with the same name would end up in one space."""


class UnknownLabelError(CausalisError):
    """A referenced label is not a factor of the operator's space."""


class MismatchedFactorsError(CausalisError):
    """Target space is not a permutation of the source space."""


class DimensionMismatchError(CausalisError):
    """Operator/space dimensions do not line up."""


class ValidationError(CausalisError):
    """Input object violates its documented invariants."""


class ScenarioError(CausalisError):
    """Operation called with a scenario it does not support."""


class ExplosionGuardError(CausalisError):
    """Enumeration would exceed the configured size guard."""


class InvalidDecompositionError(CausalisError):
    """Claimed causal decomposition does not describe a causal object."""


class UnsupportedScenarioError(CausalisError):
    """No realization construction is known for this scenario."""


class IllPosedProgramError(CausalisError):
    """Conic program has no variables or is otherwise malformed."""


class SolverFailureError(CausalisError):
    """The conic solver could not reach the requested accuracy."""


class MissingCertificateError(CausalisError):
    """Report lacks the certificate its verdict requires."""
