"""Invariants of fourth-order linear differential operators on the plane."""
__version__ = "0.1.0"
