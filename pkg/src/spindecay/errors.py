"""Exception types shared across the package.

The CLI maps these onto its exit-code contract (2 input, 3 regime, 4 numeric).
"""


class SpinDecayError(Exception):
    """Base class for all package errors."""


class InvalidInputError(SpinDecayError, ValueError):
    """Parameters or arguments outside their documented domain."""


class GraphParseError(InvalidInputError):
    def __init__(self, lineno: int, line: str, reason: str):
        self.lineno = lineno
        self.line = line
        self.reason = reason
        super().__init__(f"line {lineno}: {reason}: {line!r}")


class InvalidQueryError(InvalidInputError):
    """A query against a pinned vertex, or a pinned SAW node."""


class RegimeError(SpinDecayError):
    """Parameters lie outside the regime an operation requires."""


class DegenerateError(RegimeError):
    """beta*gamma == 1 or beta == gamma == 0."""


class NumericFailure(SpinDecayError, ArithmeticError):
    """A root finder or optimizer did not converge."""


class SizeError(SpinDecayError):
    """Instance too large for exhaustive computation."""
