"""Simulation and analysis of a counter-propagating SPDC polarisation-entanglement source."""
from ._accel import backend

__all__ = ["backend"]
__version__ = "0.1.0"
