"""Fog-assisted cloud workload placement: cost model, constraints and optimizer."""

__version__ = "0.1.0"
