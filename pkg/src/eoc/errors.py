class EOCError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(EOCError, ValueError):
    """Malformed input: bad indices, sizes, layouts or file contents."""


class OracleLimitError(EOCError):
    """A brute-force oracle was asked for a width above its cap."""


class OrderError(EOCError):
    """Two BDDs were combined under incompatible variable orders."""


class AncillaError(EOCError):
    """A rewrite needed a spare bitline and none was supplied."""


class ConsistencyError(EOCError):
    """An internal invariant was violated (a bug, not bad input)."""
