"""Repairing CTL violations in Kripke structures through abstraction."""

__version__ = "0.1.0"
