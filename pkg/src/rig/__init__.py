"""Resilient active information gathering for multi-robot target tracking."""

__version__ = "0.1.0"
