"""Exception types shared by every module.

The CLI maps these onto exit codes (2 for validation, 3 for numerics).
"""


class ValidationError(ValueError):
    """Input outside the domain of an operation."""


class NumericError(RuntimeError):
    """An iterative or dense numerical routine failed to converge."""
