"""Shot-noise model for the computational-basis overlaps.

Each required scalar element v with |v| <= b is estimated by mapping it to
a Bernoulli probability p = (1 + v/b)/2, sampling binomial counts, and
averaging `repeats` independent estimates of `shots` shots each. The bound
b for element (r, c) is the sum of |Pauli coefficients| over the strings
that can touch that element: a Pauli string is a signed permutation whose
only nonzero entry in row r sits at column r XOR x-mask, so only strings
with x-mask = r XOR c contribute and the triangle inequality gives the
bound. Elements no string touches are exactly zero and are stored without
estimation. Readout error is a symmetric bit flip applied to p;
mitigation inverts that affine map on the empirical frequency.

Streams are keyed by (seed, operator tag, row, col), so caches are
reproducible and independent of element evaluation order.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import BoundViolation, DimensionMismatch
from .pauli import check_hermitian, decompose_hermitian

DEFAULT_SEED = 7

_MODES = ("exact", "shot", "shot_readout")


@dataclass(frozen=True)
class EstimatorConfig:
    mode: str = "exact"
    shots: int = 1000
    repeats: int = 50
    readout_flip_prob: float = 0.02
    mitigation: bool = False
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}")
        if self.mode != "exact" and (self.shots < 1 or self.repeats < 1):
            raise ValueError("shot modes require shots >= 1 and repeats >= 1")
        if not 0.0 <= self.readout_flip_prob < 0.5:
            raise ValueError("readout_flip_prob must lie in [0, 0.5)")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "EstimatorConfig":
        return cls(**data)


def element_rng(seed: int, tag: int, row: int, col: int) -> np.random.Generator:
    """Counter-style stream for one cached element."""
    return np.random.default_rng([int(seed) & (2**63 - 1), tag, row, col])


def estimate_scalar(
    true_value: float, bound: float, cfg: EstimatorConfig, rng: np.random.Generator
) -> float:
    """One estimated scalar; exact mode returns the value unchanged."""
    if bound <= 0:
        raise BoundViolation("bound must be positive")
    if abs(true_value) > bound * (1 + 1e-12):
        raise BoundViolation(f"|{true_value}| exceeds bound {bound}")
    if cfg.mode == "exact":
        return float(true_value)
    p = (1.0 + true_value / bound) / 2.0
    p = min(max(p, 0.0), 1.0)
    if cfg.mode == "shot_readout":
        f = cfg.readout_flip_prob
        p_meas = f + (1.0 - 2.0 * f) * p
    else:
        p_meas = p
    freqs = rng.binomial(cfg.shots, p_meas, size=cfg.repeats) / cfg.shots
    if cfg.mode == "shot_readout" and cfg.mitigation:
        freqs = (freqs - cfg.readout_flip_prob) / (1.0 - 2.0 * cfg.readout_flip_prob)
    return float(np.mean((2.0 * freqs - 1.0) * bound))


@dataclass(frozen=True)
class OverlapCache:
    """Estimated computational-basis elements of H and one part of W.

    h_elements is real symmetric. w_elements is real symmetric for
    part="real" and real antisymmetric (the Im entries of W_I) for
    part="imaginary"; symmetry is exact because only the upper triangle is
    estimated.
    """

    h_elements: np.ndarray
    w_elements: np.ndarray
    part: str
    provenance: EstimatorConfig

    def to_json(self) -> dict:
        return {
            "h": np.asarray(self.h_elements).tolist(),
            "w": np.asarray(self.w_elements).tolist(),
            "part": self.part,
            "config": self.provenance.to_json(),
        }


def element_bounds(op: np.ndarray) -> np.ndarray:
    """Per-element bounds sum(|coeff|) over the Pauli strings touching (r, c).

    A string's x-mask (1 bit per X or Y axis) fixes the column its row-r
    entry lands in, so b[r, c] sums |coefficients| over strings with
    x-mask = r XOR c. A zero bound proves the element is exactly zero.
    """
    pauli = decompose_hermitian(op)
    d = op.shape[0]
    by_mask: dict[int, float] = {}
    for coeff, string in pauli.terms:
        mask = 0
        for axis in string.axes:
            mask = (mask << 1) | (1 if axis in "XY" else 0)
        by_mask[mask] = by_mask.get(mask, 0.0) + abs(coeff)
    bounds = np.zeros((d, d))
    for r in range(d):
        for c in range(d):
            bounds[r, c] = by_mask.get(r ^ c, 0.0)
    return bounds


def _estimate_symmetric(true_matrix: np.ndarray, bounds: np.ndarray, cfg: EstimatorConfig,
                        tag: int, antisymmetric: bool = False) -> np.ndarray:
    d = true_matrix.shape[0]
    out = np.zeros((d, d))
    for r in range(d):
        for c in range(r, d):
            if antisymmetric and r == c:
                continue
            if bounds[r, c] == 0.0:
                continue  # no Pauli string touches this element
            val = estimate_scalar(
                true_matrix[r, c], bounds[r, c], cfg, element_rng(cfg.seed, tag, r, c)
            )
            out[r, c] = val
            out[c, r] = -val if antisymmetric else val
    return out


def build_cache(h: np.ndarray, w_part: np.ndarray, part: str, cfg: EstimatorConfig) -> OverlapCache:
    """Estimate every independent element once, before any optimization."""
    h = check_hermitian(h)
    w_part = check_hermitian(np.asarray(w_part, dtype=complex), tol=1e-8)
    if h.shape != w_part.shape:
        raise DimensionMismatch("H and W_part dimensions differ")
    if part not in ("real", "imaginary"):
        raise ValueError(f"unknown part {part!r}")
    h_true = h.real
    w_true = w_part.real if part == "real" else w_part.imag
    if cfg.mode == "exact":
        return OverlapCache(h_true.copy(), w_true.copy(), part, cfg)
    h_est = _estimate_symmetric(h_true, element_bounds(h), cfg, tag=0)
    w_est = _estimate_symmetric(
        w_true, element_bounds(w_part), cfg, tag=1, antisymmetric=(part == "imaginary")
    )
    return OverlapCache(h_est, w_est, part, cfg)


def expectation_from_cache(cache: OverlapCache, bra: np.ndarray, ket: np.ndarray, which: str) -> float:
    """bra^T M ket over the cached elements.

    For part="imaginary" and which="w" this is the bilinear form of the
    antisymmetric Im-matrix, i.e. the coefficient of i in <bra|W_I|ket>.
    """
    if which == "h":
        m = np.asarray(cache.h_elements)
    elif which == "w":
        m = np.asarray(cache.w_elements)
    else:
        raise ValueError(f"which must be 'h' or 'w', got {which!r}")
    bra = np.asarray(bra, dtype=float)
    ket = np.asarray(ket, dtype=float)
    if bra.shape != (m.shape[0],) or ket.shape != (m.shape[0],):
        raise DimensionMismatch("vector length does not match the cache")
    return float(bra @ m @ ket)
