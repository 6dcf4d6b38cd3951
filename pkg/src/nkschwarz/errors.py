"""Exception types shared across the library."""


class NkSchwarzError(Exception):
    """Base class for all library-specific errors."""


class NotPositiveDefinite(NkSchwarzError):
    """A matrix that must be SPD failed its Cholesky factorization.

    Raised when a pivot <= 0 is met while factoring a subdomain solver
    matrix, a Gram matrix or an inexact coarse operator.
    """


class NoConvergence(NkSchwarzError):
    """An eigenvalue iteration exhausted its budget without converging."""


class SizeMismatch(NkSchwarzError):
    """Array dimensions are inconsistent with the operation requested."""


class EmptySubdomain(NkSchwarzError):
    """A subdomain of the decomposition received no interior unknowns."""


class SingularGram(NkSchwarzError):
    """A Gram matrix that must be nonsingular on its working space is not.

    Signals contamination of a candidate basis by near-kernel components.
    """


class ConfigError(NkSchwarzError):
    """An experiment configuration failed validation."""
