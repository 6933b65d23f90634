"""Autonomous orographic soaring: wind surrogate, MAV plant, INDI control with WLS allocation, and position search."""

__version__ = "0.1.0"
