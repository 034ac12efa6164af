"""Desk-scale continual learning with a dual-memory, shape-biased learner."""

__version__ = "0.1.0"
