"""Exception hierarchy shared by the library and the CLI."""


class SSHAtomError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(SSHAtomError, ValueError):
    """Invalid or inconsistent input parameters."""


class DomainError(SSHAtomError, ValueError):
    """A formula or model is used outside its regime of validity."""


class DegeneratePhaseError(DomainError):
    """No clear spectral gap separates the requested in-gap states."""


class UnsupportedCaseError(DomainError):
    """The closed-form solution does not cover this coupling configuration."""


class NumericalError(SSHAtomError, ArithmeticError):
    """An iterative routine failed to converge."""


class IntegratorError(NumericalError):
    """Time propagation lost unitarity beyond tolerance."""
