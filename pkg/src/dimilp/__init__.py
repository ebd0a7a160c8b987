"""Distributed mixed-integer linear programming by cut generation and constraint exchange."""

__version__ = "0.1.0"
