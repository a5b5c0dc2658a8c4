"""Exception types shared across the package."""


class OrliczLabError(Exception):
    """Base class for all package errors."""


class DomainError(OrliczLabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class UsageError(OrliczLabError, ValueError):
    """Malformed input: bad grid, bad JSON, unsorted spec and so on."""


class PreconditionError(OrliczLabError):
    """A required certificate or hypothesis is missing or failed."""


class RankDeficiencyError(OrliczLabError, ValueError):
    """Matrix is numerically singular."""


class UnsupportedMapError(OrliczLabError, ValueError):
    """Affine map cannot be applied exactly to box-supported functions."""
