"""Friendship-network inference from campus check-in records, with behaviour
metrics and peer-effect analysis."""

__version__ = "0.1.0"
