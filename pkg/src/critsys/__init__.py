"""Numerical toolkit for boundary blow-up in almost-critical Hamiltonian Neumann systems."""
__version__ = "0.1.0"
