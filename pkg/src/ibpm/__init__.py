"""Interval-based propagation for graph neural networks over control flow graphs."""

__version__ = "0.1.0"
