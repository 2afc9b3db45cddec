"""Qubit / two-level-system coupling factors for phase and flux qubits."""

__version__ = "0.1.0"
