class NetrError(Exception):
    """Base class for all errors raised by this package."""


class DataError(NetrError):
    """Input data is malformed or inconsistent."""


class QueryError(NetrError):
    """A query cannot be answered as posed (unknown user, bad parameters)."""


class InvariantError(NetrError):
    """An internal invariant was violated; indicates a bug, not bad input."""
