"""Exception types raised across the package."""


class PaaError(Exception):
    """Base class for all package errors."""


class SchemaError(PaaError, ValueError):
    """Data does not match its manifold signature or file schema."""


class DomainError(PaaError, ValueError):
    """A map was evaluated outside the set where it is defined."""


class DegenerateDataError(PaaError, ValueError):
    """The sample carries too little spread for the requested estimate."""


class ConvergenceError(PaaError, RuntimeError):
    """An iterative solver hit its iteration cap without converging."""
