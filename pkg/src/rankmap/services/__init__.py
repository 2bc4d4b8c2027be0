"""Numerical services for rankmap."""
