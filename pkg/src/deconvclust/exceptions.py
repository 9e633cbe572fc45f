"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Array shapes are inconsistent with each other or with a basis."""


class ParameterError(ValueError):
    """A scalar or configuration parameter is outside its valid range."""


class DegenerateSpectrumError(ValueError):
    """The discretized operator is not invertible on the grid."""


class DomainError(ValueError):
    """A closed-form rate expression is evaluated outside its domain."""
