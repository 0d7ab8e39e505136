"""Variational functional, modified Hamiltonian, and multiplier solves.

Everything runs in real arithmetic. For the real part of W the effective
matrix is the real symmetric component; for the imaginary part it is the
antisymmetric matrix A with W_I = i*A, and multiplier vectors are stored as
real coefficient vectors tagged purity="imaginary" (the represented vector
is i*v). The functional value reported for the imaginary part is the
coefficient of i, so exact eigenstates yield the real numbers printed in
the target tables (e.g. 2, -2, 0 for the one-qubit model).

Sign conventions for the multiplier equations
    (H_mod - E_side) L = -xi/2 * W_part phi_other
follow the first-order-variation construction: for the real part xi = +1
for every (side, nu); for the imaginary part the bra-side and ket-side
constraints carry opposite signs, and the two sides of the element carry
opposite tables:

    side i: xi(a) = -1, xi(b) = +1
    side j: xi(a) = +1, xi(b) = -1

which enforces L_a = -L_b on both sides. First-order stationarity of the
functional at exact eigenstates holds only with this table (checked by the
second-order convergence tests).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .ansatz import (
    HypersphericalAngles,
    MultiplierVector,
    amplitude_jacobian,
    amplitudes,
)
from .errors import (
    CacheMiss,
    ComplexResidue,
    MaxIterations,
    NearZeroEnergy,
    NormViolation,
    SingularSystem,
)
from .pauli import PauliSum, check_hermitian, to_dense

LAMBDA = -0.5
ENERGY_EPS = 1e-9
COND_LIMIT = 1e9
PURITY_TOL = 1e-8
RESIDUAL_TOL = 1e-10


def _purity_residue(w_part: np.ndarray, part: str) -> float:
    """How far w_part is from the declared purity (real sym / imaginary)."""
    if part == "real":
        return float(max(np.max(np.abs(w_part.imag)), np.max(np.abs(w_part - w_part.T))))
    return float(max(np.max(np.abs(w_part.real)), np.max(np.abs(w_part + w_part.T))))


def effective_w(w_part: np.ndarray, part: str) -> np.ndarray:
    """Real working matrix: Re(W_R) (symmetric) or Im(W_I) (antisymmetric)."""
    return np.asarray(w_part).real.copy() if part == "real" else np.asarray(w_part).imag.copy()


@dataclass(frozen=True)
class ProblemInstance:
    """One (H, W_part) evaluation context.

    h_eff and w_eff are the real matrices every functional and multiplier
    evaluation consumes; they default to the exact dense realizations and
    are replaced by estimated ones through with_estimates().
    """

    hamiltonian: PauliSum
    w_part: np.ndarray
    part: str
    xi_a: float
    xi_b: float
    lam: float
    h_eff: np.ndarray
    w_eff: np.ndarray

    def __post_init__(self):
        if self.part not in ("real", "imaginary"):
            raise ValueError(f"unknown part {self.part!r}")
        if self.lam != LAMBDA:
            raise ValueError("the constraint multiplier is identically -1/2")
        expected = (1.0, 1.0) if self.part == "real" else (1.0, -1.0)
        if (self.xi_a, self.xi_b) != expected:
            raise ValueError(f"xi table for part={self.part} must be {expected}")

    @classmethod
    def build(cls, hamiltonian: PauliSum, w_part: np.ndarray, part: str) -> "ProblemInstance":
        w_part = check_hermitian(np.asarray(w_part, dtype=complex), tol=PURITY_TOL)
        if _purity_residue(w_part, part) > PURITY_TOL:
            raise ComplexResidue(f"w_part is not purely {part} within {PURITY_TOL}")
        h_dense = to_dense(hamiltonian)
        if np.max(np.abs(h_dense.imag)) > PURITY_TOL:
            raise ComplexResidue("only real-symmetric Hamiltonians are supported")
        xi_a, xi_b = (1.0, 1.0) if part == "real" else (1.0, -1.0)
        return cls(
            hamiltonian=hamiltonian,
            w_part=w_part,
            part=part,
            xi_a=xi_a,
            xi_b=xi_b,
            lam=LAMBDA,
            h_eff=h_dense.real.copy(),
            w_eff=effective_w(w_part, part),
        )

    @property
    def dim(self) -> int:
        return self.h_eff.shape[0]

    def with_estimates(self, cache) -> "ProblemInstance":
        """Same problem evaluated through an overlap cache's estimates."""
        if getattr(cache, "part", self.part) != self.part:
            raise CacheMiss(f"cache holds part={cache.part!r}, problem needs {self.part!r}")
        h = np.asarray(cache.h_elements, dtype=float)
        w = np.asarray(cache.w_elements, dtype=float)
        if h.shape != self.h_eff.shape or w.shape != self.w_eff.shape:
            raise CacheMiss("cache dimension does not match the problem")
        return replace(self, h_eff=h, w_eff=w)


def xi_sign(part: str, which: str, nu: str) -> float:
    """Sign xi in (H_mod - E) L = -xi/2 W phi_other for one (side, nu)."""
    if which not in ("i_side", "j_side"):
        raise ValueError(f"unknown side {which!r}")
    if nu not in ("a", "b"):
        raise ValueError(f"unknown constraint label {nu!r}")
    if part == "real":
        return 1.0
    base = 1.0 if nu == "a" else -1.0
    return base if which == "j_side" else -base


def _lam_term_sign(part: str, nu: str) -> float:
    # Sign of the lam_side * phi_side term in the non-normalized systems.
    if part == "real":
        return -1.0
    return -1.0 if nu == "b" else 1.0


@dataclass(frozen=True)
class MultiplierSet:
    """The four multiplier vectors entering the functional."""

    l_ia: MultiplierVector
    l_ib: MultiplierVector
    l_ja: MultiplierVector
    l_jb: MultiplierVector
    part: str

    def __post_init__(self):
        sign = 1.0 if self.part == "real" else -1.0
        for a, b in ((self.l_ia, self.l_ib), (self.l_ja, self.l_jb)):
            if not np.allclose(a.as_array(), sign * b.as_array(), atol=1e-9):
                raise ValueError("multiplier symmetry invariant violated")
            want = "real" if self.part == "real" else "imaginary"
            if a.purity != want or b.purity != want:
                raise ValueError("multiplier purity does not match the part")


def energy(state: np.ndarray, h: np.ndarray) -> float:
    """Expectation <phi|H|phi> of a normalized real state."""
    state = np.asarray(state, dtype=float)
    if abs(np.linalg.norm(state) - 1.0) > 1e-10:
        raise NormViolation("state is not normalized to 1e-10")
    h = np.asarray(h)
    return float(state @ h.real @ state)


def h_mod(h: np.ndarray, state: np.ndarray) -> np.ndarray:
    """H - H|phi><phi|H / <phi|H|phi>; invertible near non-degenerate eigenstates."""
    h = np.asarray(h, dtype=float)
    state = np.asarray(state, dtype=float)
    e = float(state @ h @ state)
    if abs(e) <= ENERGY_EPS:
        raise NearZeroEnergy(f"|<phi|H|phi>| = {abs(e):.3e} <= {ENERGY_EPS}")
    hp = h @ state
    return h - np.outer(hp, hp) / e


def _shifted_operator(p: ProblemInstance, phi_side: np.ndarray) -> tuple[np.ndarray, float]:
    e_side = float(phi_side @ p.h_eff @ phi_side)
    if abs(e_side) <= ENERGY_EPS:
        raise NearZeroEnergy(f"|<phi|H|phi>| = {abs(e_side):.3e} <= {ENERGY_EPS}")
    m = h_mod(p.h_eff, phi_side) - e_side * np.eye(p.dim)
    return m, e_side


def _solve_checked(m: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    if np.linalg.cond(m) >= COND_LIMIT:
        raise SingularSystem("shifted system condition number exceeds 1e9")
    sol = np.linalg.solve(m, rhs)
    scale = max(1.0, float(np.linalg.norm(rhs)))
    if np.linalg.norm(m @ sol - rhs) > RESIDUAL_TOL * scale:
        raise SingularSystem("linear solve residual above tolerance")
    return sol


def _sides(p: ProblemInstance, phi_i, phi_j, which: str):
    phi_i = np.asarray(phi_i, dtype=float)
    phi_j = np.asarray(phi_j, dtype=float)
    return (phi_i, phi_j) if which == "i_side" else (phi_j, phi_i)


def _rhs(p: ProblemInstance, phi_side, phi_other, which, nu, lam_side=None) -> np.ndarray:
    q = -xi_sign(p.part, which, nu) / 2.0 * (p.w_eff @ phi_other)
    if lam_side is not None:
        q = q + _lam_term_sign(p.part, nu) * lam_side * phi_side
    return q


def exact_multiplier(
    p: ProblemInstance, phi_i, phi_j, which: str, nu: str, lam_side: float | None = None
) -> MultiplierVector:
    """Solve (H_mod - E_side) L = -xi/2 W_part phi_other for one multiplier.

    lam_side adds the non-normalized constraint term to the right-hand side
    (App-C extension); omit it for normalized trial states.
    """
    phi_side, phi_other = _sides(p, phi_i, phi_j, which)
    m, _ = _shifted_operator(p, phi_side)
    sol = _solve_checked(m, _rhs(p, phi_side, phi_other, which, nu, lam_side))
    purity = "real" if p.part == "real" else "imaginary"
    return MultiplierVector(tuple(sol), purity)


def m_functional(
    l: MultiplierVector,
    p: ProblemInstance,
    phi_side,
    phi_other,
    which: str = "i_side",
    nu: str = "b",
) -> float:
    """Quadratic functional whose stationary point is the exact multiplier.

    Real part: <L|(H_mod - E)|L> + <phi_other|W_R|L>, the printed iterative
    form. Imaginary part: the same quadratic over the real coefficient
    vector with linear term -2 v.q, q the right-hand side of the defining
    system (the printed quadratic-only form has minimizer zero and cannot
    reproduce the exact solve; see the decisions ledger).
    """
    phi_side = np.asarray(phi_side, dtype=float)
    phi_other = np.asarray(phi_other, dtype=float)
    m, _ = _shifted_operator(p, phi_side)
    v = l.as_array()
    q = _rhs(p, phi_side, phi_other, which, nu)
    return float(v @ m @ v - 2.0 * v @ q)


def m_functional_unnormalized(
    l: MultiplierVector,
    p: ProblemInstance,
    phi_side,
    phi_other,
    lam: float,
    which: str = "i_side",
    nu: str = "b",
) -> float:
    """m_functional with the constraint-multiplier linear term included."""
    phi_side = np.asarray(phi_side, dtype=float)
    phi_other = np.asarray(phi_other, dtype=float)
    m, _ = _shifted_operator(p, phi_side)
    v = l.as_array()
    q = _rhs(p, phi_side, phi_other, which, nu, lam)
    return float(v @ m @ v - 2.0 * v @ q)


def iterative_multiplier(
    p: ProblemInstance,
    phi_i,
    phi_j,
    which: str,
    nu: str,
    method: str = "stationary_solve",
    steps: int = 500,
    rate: float = 0.1,
    tol: float | None = None,
) -> MultiplierVector:
    """Find a multiplier through the quadratic functional instead of directly.

    stationary_solve zeroes the coefficient derivatives of m_functional and
    solves the resulting linear system; descent runs fixed-step gradient
    descent on it from L = 0 (convergent only where the shifted operator is
    positive definite, i.e. near the ground state).
    """
    phi_side, phi_other = _sides(p, phi_i, phi_j, which)
    m, _ = _shifted_operator(p, phi_side)
    q = _rhs(p, phi_side, phi_other, which, nu)
    purity = "real" if p.part == "real" else "imaginary"
    if method == "stationary_solve":
        sol = _solve_checked(m + m.T, 2.0 * q)
        return MultiplierVector(tuple(sol), purity)
    if method != "descent":
        raise ValueError(f"unknown method {method!r}")
    v = np.zeros(p.dim)
    for _ in range(steps):
        grad = 2.0 * (m @ v) - 2.0 * q
        v = v - rate * grad
        if not np.all(np.isfinite(v)) or np.linalg.norm(v) > 1e12:
            raise MaxIterations("descent on the multiplier functional diverged")
    if tol is not None and np.linalg.norm(2.0 * (m @ v) - 2.0 * q) > tol:
        raise MaxIterations("descent did not reach the requested tolerance")
    return MultiplierVector(tuple(v), purity)


def multiplier_set(
    p: ProblemInstance, phi_i, phi_j, method: str = "exact", lam_i: float | None = None, lam_j: float | None = None
) -> MultiplierSet:
    """All four multipliers for one (phi_i, phi_j) pair."""
    def one(which, nu):
        lam_side = lam_i if which == "i_side" else lam_j
        if method == "exact":
            return exact_multiplier(p, phi_i, phi_j, which, nu, lam_side)
        if lam_side is not None:
            raise ValueError("iterative multipliers support normalized states only")
        return iterative_multiplier(p, phi_i, phi_j, which, nu, method=method)

    return MultiplierSet(
        l_ia=one("i_side", "a"),
        l_ib=one("i_side", "b"),
        l_ja=one("j_side", "a"),
        l_jb=one("j_side", "b"),
        part=p.part,
    )


def _check_purity(p: ProblemInstance, ls: MultiplierSet):
    if ls.part != p.part:
        raise ValueError("multiplier set purity does not match the problem part")
    if _purity_residue(np.asarray(p.w_part), p.part) > PURITY_TOL:
        raise ComplexResidue("w_part purity residue above 1e-8")


def _side_combination(ls: MultiplierSet, p: ProblemInstance):
    # Coefficient vectors multiplying (H - E_side) phi_side in the reported
    # (real) functional value: l_a + l_b for the real part, v_b - v_a for
    # the imaginary one (where L = i v).
    if p.part == "real":
        s_i = ls.l_ia.as_array() + ls.l_ib.as_array()
        s_j = ls.l_ja.as_array() + ls.l_jb.as_array()
    else:
        s_i = ls.l_ib.as_array() - ls.l_ia.as_array()
        s_j = ls.l_jb.as_array() - ls.l_ja.as_array()
    return s_i, s_j


def functional_value(
    p: ProblemInstance, phi_i, phi_j, ls: MultiplierSet, e_i: float, e_j: float
) -> float:
    """The six-term variational sum, reported as a real number.

    For the real part this is the sum itself; for the imaginary part it is
    the coefficient of i (the sum is purely imaginary for real trial
    states). At exact eigenstates with exact multipliers the value equals
    the corresponding matrix element of W_part in the eigenbasis.
    """
    _check_purity(p, ls)
    phi_i = np.asarray(phi_i, dtype=float)
    phi_j = np.asarray(phi_j, dtype=float)
    eye = np.eye(p.dim)
    w_ij = float(phi_i @ p.w_eff @ phi_j)
    w_ji = float(phi_j @ p.w_eff @ phi_i)
    s_i, s_j = _side_combination(ls, p)
    bracket = w_ij - w_ji if p.part == "real" else w_ij + w_ji
    return (
        w_ij
        + float(s_i @ (p.h_eff - e_i * eye) @ phi_i)
        + float(s_j @ (p.h_eff - e_j * eye) @ phi_j)
        + p.lam * bracket
    )


def functional_value_unnormalized(
    p: ProblemInstance, phi_i, phi_j, ls: MultiplierSet, lam_i: float, lam_j: float
) -> float:
    """Non-normalized extension: adds lam * (<phi|phi> - 1) constraint terms.

    Energies are the plain quadratic forms <phi|H|phi> of the raw
    coefficient vectors. For the imaginary part the constraint multipliers
    are the real coefficients of the purely imaginary lam_i = lam_j
    (lambda_ij returns exactly that), and the terms enter the reported
    i-coefficient.
    """
    _check_purity(p, ls)
    phi_i = np.asarray(phi_i, dtype=float)
    phi_j = np.asarray(phi_j, dtype=float)
    e_i = float(phi_i @ p.h_eff @ phi_i)
    e_j = float(phi_j @ p.h_eff @ phi_j)
    eye = np.eye(p.dim)
    w_ij = float(phi_i @ p.w_eff @ phi_j)
    w_ji = float(phi_j @ p.w_eff @ phi_i)
    s_i, s_j = _side_combination(ls, p)
    bracket = w_ij - w_ji if p.part == "real" else w_ij + w_ji
    return (
        w_ij
        + float(s_i @ (p.h_eff - e_i * eye) @ phi_i)
        + float(s_j @ (p.h_eff - e_j * eye) @ phi_j)
        + lam_i * (float(phi_i @ phi_i) - 1.0)
        + lam_j * (float(phi_j @ phi_j) - 1.0)
        + p.lam * bracket
    )


def lambda_ij(phi_i, phi_j, w_part: np.ndarray, part: str | None = None) -> float:
    """Constraint multiplier -<phi_i|W_part|phi_j>/2 as a real coefficient.

    Real case: the real part of the bracket. Imaginary case: the bracket is
    purely imaginary, so the coefficient of i is returned.
    """
    w_part = np.asarray(w_part, dtype=complex)
    if part is None:
        re, im = np.max(np.abs(w_part.real)), np.max(np.abs(w_part.imag))
        part = "real" if im <= PURITY_TOL else "imaginary"
        if part == "imaginary" and re > PURITY_TOL:
            raise ComplexResidue("w_part is neither purely real nor purely imaginary")
    phi_i = np.asarray(phi_i, dtype=float)
    phi_j = np.asarray(phi_j, dtype=float)
    bracket = phi_i @ w_part @ phi_j
    val = bracket.real if part == "real" else bracket.imag
    return float(-val / 2.0)


def functional_gradient(
    p: ProblemInstance,
    angles_i: HypersphericalAngles,
    angles_j: HypersphericalAngles,
    ls: MultiplierSet,
    cache=None,
) -> np.ndarray:
    """Angle gradient of the functional with multipliers and energies frozen.

    Returns the length-2(D-1) vector (d/d angles_i, d/d angles_j). The
    energies are the expectation values at the given angles (their current
    values); they and the multipliers are held fixed, matching one step of
    the outer loop.
    """
    prob = p.with_estimates(cache) if cache is not None else p
    _check_purity(prob, ls)
    phi_i, phi_j = amplitudes(angles_i), amplitudes(angles_j)
    if phi_i.shape[0] != prob.dim or phi_j.shape[0] != prob.dim:
        raise CacheMiss("angle dimension does not match the cached operators")
    e_i = float(phi_i @ prob.h_eff @ phi_i)
    e_j = float(phi_j @ prob.h_eff @ phi_j)
    eye = np.eye(prob.dim)
    s_i, s_j = _side_combination(ls, prob)
    g_i = amplitude_jacobian(angles_i).T @ (prob.w_eff @ phi_j + (prob.h_eff - e_i * eye) @ s_i)
    g_j = amplitude_jacobian(angles_j).T @ (prob.w_eff.T @ phi_i + (prob.h_eff - e_j * eye) @ s_j)
    return np.concatenate([g_i, g_j])


def stationarity_residual(
    p: ProblemInstance, angles_i: HypersphericalAngles, angles_j: HypersphericalAngles
) -> tuple[np.ndarray, np.ndarray]:
    """Frozen-multiplier gradient and total self-consistent gradient.

    Both vanish together exactly at the variational solutions, so their
    stack is the residual the optimizer drives to zero. The side
    combinations s solve M_i s_i = -W phi_j and M_j s_j = -W^T phi_i (M
    the shifted modified Hamiltonian); the total gradient additionally
    differentiates through the energy and multiplier dependence on the
    angles via the adjoint vectors y = M^{-1} (H - E) phi. Each field has
    its own spurious zeros (the frozen one near the |<H>| ~ 0 rings, the
    total one at shoulder critical points next to some elements), but the
    measured zero sets are disjoint away from the solutions.
    """
    phi_i, phi_j = amplitudes(angles_i), amplitudes(angles_j)
    h = p.h_eff
    w = p.w_eff
    eye = np.eye(p.dim)

    def side(phi_side, rhs):
        e = float(phi_side @ h @ phi_side)
        if abs(e) <= ENERGY_EPS:
            raise NearZeroEnergy("expectation value below the division guard")
        hphi = h @ phi_side
        m = h - np.outer(hphi, hphi) / e - e * eye
        if np.linalg.cond(m) >= COND_LIMIT:
            raise SingularSystem("shifted system condition number exceeds 1e9")
        s = np.linalg.solve(m, rhs)
        y = np.linalg.solve(m, hphi - e * phi_side)
        return e, hphi, s, y

    e_i, hphi_i, s_i, y_i = side(phi_i, -(w @ phi_j))
    e_j, hphi_j, s_j, y_j = side(phi_j, -(w.T @ phi_i))

    def response(e, hphi, phi, s, y):
        # multiplier/energy back-action on the side term s^T (H - E) phi
        c1 = h @ (s * (hphi @ y) + y * (hphi @ s)) / e
        c2 = 2.0 * hphi * (-(s @ phi) - (s @ hphi) * (hphi @ y) / e**2 + s @ y)
        return c1 + c2

    frozen_i = w @ phi_j + (h - e_i * eye) @ s_i
    frozen_j = w.T @ phi_i + (h - e_j * eye) @ s_j
    total_i = frozen_i + response(e_i, hphi_i, phi_i, s_i, y_i) - w @ y_j
    total_j = frozen_j + response(e_j, hphi_j, phi_j, s_j, y_j) - w.T @ y_i
    jac_i = amplitude_jacobian(angles_i).T
    jac_j = amplitude_jacobian(angles_j).T
    frozen = np.concatenate([jac_i @ frozen_i, jac_j @ frozen_j])
    total = np.concatenate([jac_i @ total_i, jac_j @ total_j])
    return frozen, total


def self_consistent_gradient(
    p: ProblemInstance, angles_i: HypersphericalAngles, angles_j: HypersphericalAngles
) -> np.ndarray:
    """Total angle gradient of the functional with exact multipliers recomputed."""
    return stationarity_residual(p, angles_i, angles_j)[1]


@dataclass(frozen=True)
class FunctionalEvaluation:
    """One full evaluation at a pair of angle vectors."""

    f_value: float
    gradient: np.ndarray
    e_i: float
    e_j: float
    multipliers: MultiplierSet


def evaluate_functional(
    p: ProblemInstance,
    angles_i: HypersphericalAngles,
    angles_j: HypersphericalAngles,
    multiplier_method: str = "exact",
) -> FunctionalEvaluation:
    """Energies, multipliers, functional value, and frozen gradient in one pass."""
    phi_i, phi_j = amplitudes(angles_i), amplitudes(angles_j)
    e_i = float(phi_i @ p.h_eff @ phi_i)
    e_j = float(phi_j @ p.h_eff @ phi_j)
    if min(abs(e_i), abs(e_j)) <= ENERGY_EPS:
        raise NearZeroEnergy("expectation value below the division guard")
    method = "exact" if multiplier_method == "exact" else "stationary_solve"
    ls = multiplier_set(p, phi_i, phi_j, method=method)
    f = functional_value(p, phi_i, phi_j, ls, e_i, e_j)
    grad = functional_gradient(p, angles_i, angles_j, ls)
    return FunctionalEvaluation(f_value=f, gradient=grad, e_i=e_i, e_j=e_j, multipliers=ls)
