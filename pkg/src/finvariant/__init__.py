"""f-invariant and sofic entropy of free group actions on finite-alphabet models."""

__version__ = "0.1.0"
