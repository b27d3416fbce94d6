"""Reliability-aware erasure-coded placement and trace-driven storage simulation."""

__version__ = "0.1.0"
