"""Succinct four-message arguments and a desk-scale quantum rewinding simulator."""
__version__ = "0.1.0"
