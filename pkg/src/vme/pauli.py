"""Pauli-string sums, dense Hermitian helpers, and a small Jacobi eigensolver.

Operators are kept in two interchangeable forms: a weighted sum of Pauli
strings (the form the estimator needs for operator-norm bounds) and a dense
complex matrix. Dimensions are desk scale (<= 16), so everything is plain
numpy with no sparsity.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from itertools import product

import numpy as np

from .errors import ConvergenceFailure, DimensionMismatch, NonHermitianInput

PAULIS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)

HERMITICITY_TOL = 1e-12
PRUNE_TOL = 1e-12
MAX_DIM = 16


@dataclass(frozen=True)
class PauliString:
    """A tensor product of single-qubit Paulis, e.g. axes="XZ" on 2 qubits."""

    n_qubits: int
    axes: str

    def __post_init__(self):
        if self.n_qubits <= 0:
            raise ValueError("n_qubits must be positive")
        if len(self.axes) != self.n_qubits:
            raise ValueError(f"axes {self.axes!r} does not match n_qubits={self.n_qubits}")
        if any(a not in PAULIS for a in self.axes):
            raise ValueError(f"unknown Pauli axis in {self.axes!r}")

    def dense(self) -> np.ndarray:
        return reduce(np.kron, (PAULIS[a] for a in self.axes))


@dataclass(frozen=True)
class PauliSum:
    """Weighted sum of Pauli strings sharing one qubit count.

    Duplicate strings are merged at construction; Hermiticity is equivalent
    to all coefficients being real because the strings themselves are
    Hermitian.
    """

    n_qubits: int
    terms: tuple[tuple[complex, PauliString], ...]

    def __post_init__(self):
        for _, s in self.terms:
            if s.n_qubits != self.n_qubits:
                raise DimensionMismatch("all strings must share n_qubits")

    @classmethod
    def from_terms(cls, n_qubits: int, terms) -> "PauliSum":
        merged: dict[str, complex] = {}
        for coeff, string in terms:
            if isinstance(string, str):
                string = PauliString(n_qubits, string)
            merged[string.axes] = merged.get(string.axes, 0.0) + complex(coeff)
        kept = tuple(
            (c, PauliString(n_qubits, axes))
            for axes, c in sorted(merged.items())
            if abs(c) > PRUNE_TOL
        )
        return cls(n_qubits, kept)

    @property
    def is_hermitian(self) -> bool:
        return all(abs(c.imag) <= HERMITICITY_TOL for c, _ in self.terms)

    def abs_coeff_sum(self) -> float:
        """Sum of |coefficients|: a trivial bound on the operator 2-norm."""
        return float(sum(abs(c) for c, _ in self.terms))

    def to_json(self) -> list[dict]:
        return [
            {"coeff_re": c.real, "coeff_im": c.imag, "axes": s.axes}
            for c, s in self.terms
        ]

    @classmethod
    def from_json(cls, data: list[dict], n_qubits: int | None = None) -> "PauliSum":
        if not data and n_qubits is None:
            raise ValueError("empty PauliSum needs an explicit n_qubits")
        n = n_qubits if n_qubits is not None else len(data[0]["axes"])
        terms = [
            (complex(d["coeff_re"], d.get("coeff_im", 0.0)), d["axes"]) for d in data
        ]
        return cls.from_terms(n, terms)


def to_dense(p: PauliSum) -> np.ndarray:
    """Dense realization sum(coeff * kron(axes)); Hermitian iff coeffs real."""
    dim = 2**p.n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for coeff, string in p.terms:
        out += coeff * string.dense()
    return out


def check_hermitian(m: np.ndarray, tol: float = HERMITICITY_TOL) -> np.ndarray:
    """Return m as a complex array, raising NonHermitianInput beyond tol."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    if np.max(np.abs(m - m.conj().T)) > tol:
        raise NonHermitianInput("matrix is not Hermitian within tolerance")
    return m


def decompose_hermitian(m: np.ndarray) -> PauliSum:
    """Expand a Hermitian matrix over Pauli strings: coeff = tr(P m) / dim.

    Coefficients below 1e-12 are pruned; the result reconstructs m through
    to_dense to the same tolerance.
    """
    m = check_hermitian(m)
    dim = m.shape[0]
    n = int(np.log2(dim))
    if 2**n != dim:
        raise DimensionMismatch(f"dimension {dim} is not a power of two")
    terms = []
    for axes in product("IXYZ", repeat=n):
        string = PauliString(n, "".join(axes))
        coeff = np.trace(string.dense() @ m) / dim
        if abs(coeff) > PRUNE_TOL:
            terms.append((complex(coeff.real), string))
    return PauliSum.from_terms(n, terms)


def hermitian_split(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split W into (W + W^T)/2 and (W - W^T)/2.

    For Hermitian W the first part is the real symmetric component and the
    second is purely imaginary Hermitian; they sum to W exactly.
    """
    m = check_hermitian(m)
    w_real = (m + m.T) / 2
    w_imag = (m - m.T) / 2
    return w_real, w_imag


def _jacobi_rotation(a_pp: float, a_qq: float, a_pq: complex) -> np.ndarray:
    """2x2 unitary (acting on columns p,q) annihilating the pq element."""
    r = abs(a_pq)
    phase = a_pq / r
    tau = (a_qq - a_pp) / (2 * r)
    if tau >= 0:
        t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
    else:
        t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
    c = 1.0 / np.sqrt(1.0 + t * t)
    s = t * c
    # diag(1, conj(phase)) makes the block real, then a real rotation zeroes it
    return np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])


def eig_hermitian(m: np.ndarray, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigensolver for Hermitian matrices of dim <= 16.

    Returns eigenvalues ascending and orthonormal eigenvector columns. Sign
    convention: the first component of each eigenvector with modulus > 1e-9
    is made real and positive, so repeated runs agree exactly.
    """
    a = check_hermitian(m).copy()
    n = a.shape[0]
    if n > MAX_DIM:
        raise DimensionMismatch(f"dim {n} exceeds desk scale ({MAX_DIM})")
    v = np.eye(n, dtype=complex)
    scale = max(np.linalg.norm(a), 1e-300)
    tol = 1e-14 * scale
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.abs(a - np.diag(np.diag(a))) ** 2))
        if off <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) <= tol / max(n, 1):
                    continue
                rot = _jacobi_rotation(a[p, p].real, a[q, q].real, a[p, q])
                a[:, [p, q]] = a[:, [p, q]] @ rot
                a[[p, q], :] = rot.conj().T @ a[[p, q], :]
                v[:, [p, q]] = v[:, [p, q]] @ rot
    else:
        raise ConvergenceFailure("Jacobi sweeps stalled")
    eigenvalues = np.diag(a).real.copy()
    order = np.argsort(eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    vectors = v[:, order]
    for k in range(n):
        col = vectors[:, k]
        big = np.flatnonzero(np.abs(col) > 1e-9)
        if big.size:
            z = col[big[0]]
            vectors[:, k] = col * (np.conj(z) / abs(z))
    return eigenvalues, vectors


def conjugate_to_computational(w_diag: np.ndarray, eigvecs: np.ndarray) -> np.ndarray:
    """Return U w_diag U^dagger with eigenvector columns as U.

    Maps an operator given in the eigenbasis of H back to the computational
    basis in which overlaps are estimated.
    """
    w_diag = np.asarray(w_diag, dtype=complex)
    u = np.asarray(eigvecs, dtype=complex)
    if w_diag.shape != u.shape:
        raise DimensionMismatch("w_diag and eigvecs shapes differ")
    if np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > 1e-10:
        raise DimensionMismatch("eigvecs is not unitary to 1e-10")
    return u @ w_diag @ u.conj().T


def dense_to_json(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"dim": m.shape[0], "re": m.real.tolist(), "im": m.imag.tolist()}


def dense_from_json(data: dict) -> np.ndarray:
    dim = int(data["dim"])
    re = np.asarray(data["re"], dtype=float)
    im = np.asarray(data.get("im", np.zeros((dim, dim))), dtype=float)
    if re.shape != (dim, dim) or im.shape != (dim, dim):
        raise DimensionMismatch("re/im blocks do not match dim")
    return re + 1j * im
