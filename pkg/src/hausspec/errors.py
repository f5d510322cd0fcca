"""Exception types and resource caps shared by all modules."""

import os


class HausspecError(Exception):
    """Base class for errors raised by this package."""


class PreconditionError(HausspecError, ValueError):
    """An input violates a documented precondition."""


class ResourceLimitError(HausspecError):
    """A configured resource cap would be exceeded."""


class InconclusiveError(HausspecError):
    """A finite cutoff is too small to decide the requested quantity."""


def _env_int(name, default):
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise PreconditionError(f"{name} must be an integer, got {raw!r}") from None


def max_basis_size():
    """Largest Hall basis (all weights together) we are willing to build."""
    return _env_int("HAUSSPEC_MAX_BASIS", 250_000)


def max_weight():
    return _env_int("HAUSSPEC_MAX_WEIGHT", 24)


def max_oracle_exponent():
    """Cap on p-exponents materialised as explicit integers in lattice oracles."""
    return _env_int("HAUSSPEC_MAX_ORACLE_EXPONENT", 1 << 17)
