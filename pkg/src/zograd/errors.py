"""Exception types shared across the package."""


class ZogradError(Exception):
    """Base class for all package-specific errors."""


class InputError(ZogradError, ValueError):
    """An argument violates a documented precondition."""


class BudgetError(ZogradError, RuntimeError):
    """An oracle's evaluation budget would be exceeded."""


class DegenerateError(ZogradError, ValueError):
    """The requested quantity is degenerate (e.g. optimal step with b = 0)."""


class NoiseContractError(ZogradError, RuntimeError):
    """A custom noise model exceeded its declared variance bound."""


class DistributionContractError(ZogradError, RuntimeError):
    """A perturbation distribution produced a forbidden value (zero component)."""
