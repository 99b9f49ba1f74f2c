"""Game engine, strategies and analysis tools for recurrence operators."""

__version__ = "0.1.0"
