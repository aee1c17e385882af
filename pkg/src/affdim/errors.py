"""Exception types shared across the package."""


class BudgetError(RuntimeError):
    """An exhaustive enumeration would exceed the configured budget."""


class FitWindowError(ValueError):
    """Too few usable scales remain for a meaningful log-log fit."""
