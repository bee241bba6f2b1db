"""Antitrust market definition: critical loss, substitutability clustering, HHI screening."""

__version__ = "0.1.0"
