"""Variational estimation of matrix elements in a Hamiltonian eigenbasis."""

from . import ansatz, core, errors, estimator, experiments, models, pauli

__all__ = ["ansatz", "core", "errors", "estimator", "experiments", "models", "pauli"]

__version__ = "0.1.0"
