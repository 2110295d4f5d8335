"""Exception hierarchy shared across the package.

The split mirrors the CLI exit codes: ValidationError maps to exit 2
(bad inputs, config, schema), NumericalError to exit 3 (rank, positive
definiteness, propriety preconditions).
"""


class LoadcastError(Exception):
    """Base class for all package errors."""


class ValidationError(LoadcastError):
    """Invalid input data, configuration or file schema."""


class NumericalError(LoadcastError):
    """Numerical failure: rank deficiency, non-SPD matrix, degenerate state."""
