"""Exception hierarchy.

Command-line exit codes are derived from the class: configuration problems
map to 1, numerical/oracle failures to 2 and divergence of a run to 3.
"""


class RegMdpError(Exception):
    """Base class for every error raised by the package."""

    exit_code = 2


class DimensionError(RegMdpError, ValueError):
    pass


class DistributionError(RegMdpError, ValueError):
    """A vector or matrix row is not a probability distribution."""


class DomainError(RegMdpError, ValueError):
    """A regularizer was evaluated outside its domain."""


class ErgodicityError(RegMdpError):
    """The induced chain is reducible, periodic, or its stationary solve failed."""


class IllConditionedError(RegMdpError):
    def __init__(self, message, condition_number=None):
        super().__init__(message)
        self.condition_number = condition_number


class NumericError(RegMdpError):
    pass


class DivergenceError(RegMdpError):
    exit_code = 3

    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step


class ConfigError(RegMdpError, ValueError):
    exit_code = 1
