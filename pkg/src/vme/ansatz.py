"""Trial-state and multiplier parametrizations.

Normalized real trial states use nested-angle (hyperspherical) coordinates:
(cos t, sin t) for one qubit and
(cos a, sin a cos b, sin a sin b cos g, sin a sin b sin g) for two qubits.
Multiplier vectors are unnormalized raw coefficients, tagged with a purity
flag: purity="imaginary" means the represented vector is i * coeffs, which
keeps all optimizer state real.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedDimension

TWO_PI = 2.0 * np.pi


def wrap_angle(x):
    """Map angles to the canonical storage range [-pi, pi)."""
    return (np.asarray(x, dtype=float) + np.pi) % TWO_PI - np.pi


@dataclass(frozen=True)
class HypersphericalAngles:
    """Angles of a normalized real state; length 1 (D=2) or 3 (D=4)."""

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not all(np.isfinite(vals)):
            raise ValueError("angles must be finite")
        object.__setattr__(self, "values", tuple(wrap_angle(np.array(vals)).tolist()))

    @property
    def dim(self) -> int:
        return len(self.values) + 1

    def as_array(self) -> np.ndarray:
        return np.array(self.values, dtype=float)


@dataclass(frozen=True)
class MultiplierVector:
    """Unnormalized multiplier coefficients with a real/imaginary purity tag."""

    coeffs: tuple[float, ...]
    purity: str = "real"

    def __post_init__(self):
        if self.purity not in ("real", "imaginary"):
            raise ValueError(f"unknown purity {self.purity!r}")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    def as_array(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=float)


def amplitudes(a: HypersphericalAngles) -> np.ndarray:
    """Real unit amplitude vector of the trial state."""
    v = a.values
    if len(v) == 1:
        (t,) = v
        return np.array([np.cos(t), np.sin(t)])
    if len(v) == 3:
        al, be, ga = v
        return np.array(
            [
                np.cos(al),
                np.sin(al) * np.cos(be),
                np.sin(al) * np.sin(be) * np.cos(ga),
                np.sin(al) * np.sin(be) * np.sin(ga),
            ]
        )
    raise UnsupportedDimension(f"no ansatz for {len(v) + 1}-dimensional states")


def amplitude_jacobian(a: HypersphericalAngles) -> np.ndarray:
    """D x (D-1) matrix of d(amplitudes)/d(angle).

    Columns are orthogonal to the amplitude vector (norm preservation).
    """
    v = a.values
    if len(v) == 1:
        (t,) = v
        return np.array([[-np.sin(t)], [np.cos(t)]])
    if len(v) == 3:
        al, be, ga = v
        ca, sa = np.cos(al), np.sin(al)
        cb, sb = np.cos(be), np.sin(be)
        cg, sg = np.cos(ga), np.sin(ga)
        return np.array(
            [
                [-sa, 0.0, 0.0],
                [ca * cb, -sa * sb, 0.0],
                [ca * sb * cg, sa * cb * cg, -sa * sb * sg],
                [ca * sb * sg, sa * cb * sg, sa * sb * cg],
            ]
        )
    raise UnsupportedDimension(f"no ansatz for {len(v) + 1}-dimensional states")


def remap_principal(a: HypersphericalAngles, mode: str = "real_part") -> HypersphericalAngles:
    """Fix the global phase of the one-qubit real case.

    real_part maps the angle into (-pi/2, pi/2], where the cosine is
    nonnegative, flipping the state sign if needed; mode="none" is the
    identity.
    """
    if mode == "none":
        return a
    if mode != "real_part":
        raise ValueError(f"unknown remap mode {mode!r}")
    if a.dim != 2:
        raise UnsupportedDimension("real_part remapping is defined for one qubit only")
    (t,) = a.values
    if t > np.pi / 2:
        t -= np.pi
    elif t <= -np.pi / 2:
        t += np.pi
    return HypersphericalAngles((t,))


def multiplier_as_complex(l: MultiplierVector) -> np.ndarray:
    """Complex vector the multiplier represents: coeffs or i * coeffs."""
    v = l.as_array().astype(complex)
    return v if l.purity == "real" else 1j * v


def angles_from_vector(u: np.ndarray) -> HypersphericalAngles:
    """Invert the hyperspherical parametrization for a real vector of norm 1."""
    u = np.asarray(u, dtype=float)
    if u.shape == (2,):
        return HypersphericalAngles((np.arctan2(u[1], u[0]),))
    if u.shape == (4,):
        al = np.arctan2(np.linalg.norm(u[1:]), u[0])
        be = np.arctan2(np.linalg.norm(u[2:]), u[1])
        ga = np.arctan2(u[3], u[2])
        return HypersphericalAngles((al, be, ga))
    raise UnsupportedDimension(f"no ansatz for vectors of shape {u.shape}")
