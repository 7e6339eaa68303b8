"""Thurston's asymmetric metric on one-holed tori: Saccheri expansion maps,
trace-coordinate tori, the curve and arc metrics, and stretch paths."""

__version__ = "0.1.0"
