"""Secure in-field self-test simulation with KMAC response signatures."""

__version__ = "0.1.0"
