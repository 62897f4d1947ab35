"""Exception families raised across the package.

Each family carries the process exit code the command-line front end uses.
"""


class BosonZenoError(Exception):
    exit_code = 1


class DomainError(BosonZenoError, ValueError):
    """Argument outside the domain of an operation (bad time, bad index, ...)."""

    exit_code = 3


class InvariantViolation(BosonZenoError):
    """A computed quantity left its physically allowed range."""

    exit_code = 4


class IntegrationError(BosonZenoError):
    """The ODE integrator could not complete the sweep."""

    exit_code = 4

    def __init__(self, message, last_time=None):
        super().__init__(message)
        self.last_time = last_time


class CapacityError(BosonZenoError):
    """Requested boson number exceeds the dense-matrix oracle's cap."""

    exit_code = 5


class InfeasibleError(BosonZenoError):
    """No parameter in the search range satisfies the target."""

    exit_code = 6

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class FitDomainError(BosonZenoError, ValueError):
    exit_code = 7


class ConfigError(BosonZenoError):
    """Invalid run configuration; ``violations`` lists every problem found."""

    exit_code = 2

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("\n".join(str(v) for v in self.violations))
