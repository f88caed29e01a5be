"""Channel encoder learning by neural mutual-information maximization."""

__version__ = "0.1.0"
