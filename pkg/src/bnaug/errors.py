class BudgetExceeded(RuntimeError):
    """An exact computation would exceed its configured size budget."""
