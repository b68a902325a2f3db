"""Exception types shared across the package.

All of these derive from ValueError so callers that only care about
"bad input" can catch one base class; the CLI maps each subtype to a
machine-readable error code.
"""


class EmptyRegionError(ValueError):
    """A mask or parsing class that must contain pixels is empty."""


class ShapeMismatchError(ValueError):
    """Array shapes violate an operation's dimension contract."""


class ParameterError(ValueError):
    """A scalar argument is outside its documented domain."""
