"""Heavy-tailed non-local random deposition toolkit."""
__version__ = "0.1.0"
