"""The two benchmark models and custom-model construction.

The one-qubit model is H = X with the target operator given in the energy
eigenbasis as [[5, 2-2j], [2+2j, 3]]; the computational-basis W is the
Hadamard conjugation of that matrix, so the eigenbasis ordering is the
Hadamard columns (|+>, |->). The two-qubit model is
H = 2 X(x)I + I(x)X + 2 Z(x)X with a fixed 4x4 Hermitian target in the
eigenbasis; its computational-basis form and the per-eigenvector optimal
angles are derived from the Jacobi eigensolver at build time, using the
ascending-eigenvalue ordering.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .ansatz import HypersphericalAngles, angles_from_vector
from .core import ProblemInstance
from .errors import ComplexResidue, DimensionMismatch
from .pauli import (
    HADAMARD,
    PauliSum,
    check_hermitian,
    conjugate_to_computational,
    decompose_hermitian,
    eig_hermitian,
    hermitian_split,
    to_dense,
)

ONE_QUBIT_W_EIGENBASIS = np.array([[5.0, 2.0 - 2.0j], [2.0 + 2.0j, 3.0]])

TWO_QUBIT_W_EIGENBASIS = np.array(
    [
        [1, 3 + 1j, 5 - 3j, 13 + 8j],
        [3 - 1j, 4, 20 + 5j, 25 + 10j],
        [5 + 3j, 20 - 5j, 7, 6 - 15j],
        [13 - 8j, 25 - 10j, 6 + 15j, 10],
    ],
    dtype=complex,
)


@dataclass(frozen=True)
class Model:
    """A Hamiltonian, a target operator, and the derived eigenbasis data."""

    name: str
    n_qubits: int
    h_pauli: PauliSum
    h_dense: np.ndarray
    w_dense: np.ndarray
    w_eigenbasis: np.ndarray
    eigvecs: np.ndarray
    optimal_angles: tuple[HypersphericalAngles, ...]

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def w_part(self, part: str) -> np.ndarray:
        w_real, w_imag = hermitian_split(self.w_dense)
        return w_real if part == "real" else w_imag

    def problem(self, part: str) -> ProblemInstance:
        return ProblemInstance.build(self.h_pauli, self.w_part(part), part)

    def targets(self, part: str) -> list[float]:
        comp = self.w_eigenbasis.real if part == "real" else self.w_eigenbasis.imag
        uniq = sorted({round(float(v), 12) for v in comp.ravel()}, reverse=True)
        return [float(v) for v in uniq]


def _derive(name: str, h_pauli: PauliSum, w_eigenbasis: np.ndarray, basis: np.ndarray | None = None) -> Model:
    h_dense = to_dense(h_pauli)
    if np.max(np.abs(h_dense.imag)) > 1e-10:
        raise ComplexResidue("model Hamiltonians must be real symmetric")
    w_eigenbasis = check_hermitian(w_eigenbasis, tol=1e-10)
    if basis is None:
        evals, basis = eig_hermitian(h_dense)
        gaps = np.diff(evals)
        if np.any(np.abs(gaps) <= 1e-9) or np.any(np.abs(evals) <= 1e-9):
            raise DimensionMismatch("model needs distinct nonzero eigenvalues")
    w_dense = conjugate_to_computational(w_eigenbasis, basis)
    cols = basis.real
    if np.max(np.abs(basis.imag)) > 1e-10:
        raise ComplexResidue("model eigenvectors must be real")
    optimal = tuple(angles_from_vector(cols[:, k]) for k in range(cols.shape[1]))
    return Model(
        name=name,
        n_qubits=h_pauli.n_qubits,
        h_pauli=h_pauli,
        h_dense=h_dense,
        w_dense=w_dense,
        w_eigenbasis=w_eigenbasis,
        eigvecs=cols,
        optimal_angles=optimal,
    )


@lru_cache(maxsize=None)
def one_qubit_model() -> Model:
    h = PauliSum.from_terms(1, [(1.0, "X")])
    # The eigenbasis ordering is fixed by W_1 = H_d W^D_1 H_d: columns |+>, |->.
    return _derive("one_qubit", h, ONE_QUBIT_W_EIGENBASIS, basis=HADAMARD.copy())


@lru_cache(maxsize=None)
def two_qubit_model() -> Model:
    h = PauliSum.from_terms(2, [(2.0, "XI"), (1.0, "IX"), (2.0, "ZX")])
    return _derive("two_qubit", h, TWO_QUBIT_W_EIGENBASIS)


def custom_model(h: PauliSum | np.ndarray, w_computational: np.ndarray, name: str = "custom") -> Model:
    """Model from a Hamiltonian and a computational-basis Hermitian target."""
    h_pauli = h if isinstance(h, PauliSum) else decompose_hermitian(np.asarray(h))
    w = check_hermitian(np.asarray(w_computational, dtype=complex))
    if w.shape[0] != 2**h_pauli.n_qubits:
        raise DimensionMismatch("W dimension does not match the Hamiltonian")
    evals, basis = eig_hermitian(to_dense(h_pauli))
    gaps = np.diff(evals)
    if np.any(np.abs(gaps) <= 1e-9) or np.any(np.abs(evals) <= 1e-9):
        raise DimensionMismatch("custom model needs distinct nonzero eigenvalues")
    w_eigenbasis = basis.conj().T @ w @ basis
    return _derive(name, h_pauli, w_eigenbasis, basis=basis)


def resolve_model(model) -> Model:
    if isinstance(model, Model):
        return model
    if model == "one_qubit":
        return one_qubit_model()
    if model == "two_qubit":
        return two_qubit_model()
    raise ValueError(f"unknown model {model!r}")
