class BudgetError(RuntimeError):
    """A computation would exceed its configured enumeration budget."""


class SchemaError(ValueError):
    """An input document does not match its schema."""
