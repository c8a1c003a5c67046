"""Exception types shared across the package."""


class NlslabError(Exception):
    """Base class for all package-specific errors."""


class DomainError(NlslabError, ValueError):
    """Model parameters outside the admissible range."""


class NonConvergence(NlslabError, RuntimeError):
    """An iterative solver failed to reach its tolerance."""


class GridTooCoarse(NonConvergence):
    """The requested accuracy is unreachable on the supplied grid."""


class SingularOperator(NlslabError, RuntimeError):
    """A linear solve hit an (near-)singular operator."""


class PositiveInfimum(NlslabError, RuntimeError):
    """The constrained quadratic-form infimum came out non-negative."""


class IllConditioned(NlslabError, RuntimeError):
    """An eigenvalue certificate failed (wrong count or degenerate)."""


class DegenerateGauge(NlslabError, RuntimeError):
    """The phase-fixing pairing is numerically zero; no gauge exists."""


class NegativeQuadraticForm(NlslabError, RuntimeError):
    """A quadratic form that should be nonnegative came out negative;
    signals broken orthogonality or a miscalibrated distance cutoff."""


class OutOfRange(NlslabError, ValueError):
    """A lookup fell outside the tabulated range."""


class Inconsistent(NlslabError, RuntimeError):
    """Two readings that must agree (mode sign vs K sign on the overlap
    band) disagree; signals a miscalibrated delta chain."""


class ParseError(NlslabError, ValueError):
    """Malformed config text."""


class FormatError(NlslabError, ValueError):
    """A snapshot file does not follow the binary layout."""


class VersionError(FormatError):
    """A snapshot file has an unsupported version tag."""


class NonFiniteData(NlslabError, ValueError):
    """Field values contain NaN or Inf."""
