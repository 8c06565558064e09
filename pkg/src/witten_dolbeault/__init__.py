"""Deformed Dolbeault index densities on tori: jet invariants, forms and heat traces."""

__version__ = "0.1.0"
