"""Exception hierarchy shared by all engines."""


class ForgeError(Exception):
    """Base class for package errors."""


class ParameterDomainError(ForgeError, ValueError):
    """A parameter lies outside its admissible range."""


class DomainError(ForgeError, ValueError):
    """An argument or evaluated quantity is outside the operation's domain."""


class CapabilityError(ForgeError, NotImplementedError):
    """The requested family / dimension combination is not supported."""


class AccuracyError(ForgeError, ArithmeticError):
    """A numerical routine could not reach its accuracy target.

    Attributes
    ----------
    residual : float
        The estimated error at the point of failure.
    """

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class SimulationBudgetError(ForgeError, RuntimeError):
    """Too many paths exhausted the simulation budget."""


class CensoredError(ForgeError, RuntimeError):
    """A clock query lies beyond the simulated (non-final) horizon."""
