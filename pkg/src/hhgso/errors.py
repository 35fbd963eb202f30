"""Exception types raised by the library."""


class HHGSOError(Exception):
    """Base class for library-specific failures."""


class NumericError(HHGSOError, ArithmeticError):
    """A non-finite objective value or an undefined numeric step."""


class ParseError(HHGSOError, ValueError):
    """Malformed textual input.

    ``position`` is a 0-based character offset (spec strings) and ``line`` a
    1-based line number (dataset files); either may be None.
    """

    def __init__(self, message, position=None, line=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if position is not None:
            where.append(f"position {position}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)
        self.position = position
        self.line = line


class ResourceLimitError(HHGSOError):
    """A request that would exceed a configured memory/size cap."""
