"""Deterministic 2D traffic simulator for rigid leader-follower formations."""

__version__ = "0.1.0"
