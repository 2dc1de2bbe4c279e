"""Line-energy densities and evaluation of the energy on polyhedral currents.

The flagship density is the anisotropic quadratic family

    psi(b, t) = |b|^2 + eta * (b . t)^2,   eta in [0, 1],

defined on integer multiplicity vectors b and unit orientations t, together
with its positively one-homogeneous extension to arbitrary orientation
vectors.  The isotropic-crystal density is a rescaled instance of the same
family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .currents import PolyhedralCurrent, restrict

__all__ = [
    "Integrand",
    "CubicIntegrand",
    "IsotropicElasticParams",
    "psi_cubic",
    "psi_extended",
    "psi_extended_many",
    "psi_crystal",
    "energy",
]

# Tangents are accepted if within UNIT_TOL of unit length and normalized
# defensively; beyond that the call is treated as a caller bug.
UNIT_TOL = 1e-6


def _as_vec(x) -> np.ndarray:
    if hasattr(x, "entries"):
        x = x.entries
    return np.asarray(x, dtype=float)


def _unit(t) -> np.ndarray:
    t = _as_vec(t)
    nt = np.linalg.norm(t)
    if abs(nt - 1.0) > UNIT_TOL:
        raise ValueError(f"orientation must be a unit vector, got |t| = {nt}")
    return t / nt


def psi_cubic(b, t, eta: float) -> float:
    """Quadratic anisotropic line-energy density |b|^2 + eta (b.t)^2."""
    b = _as_vec(b)
    t = _unit(t)
    return float(b @ b + eta * (b @ t) ** 2)


def psi_extended(b, T, eta: float) -> float:
    """One-homogeneous extension |T| psi(b, T/|T|); exactly 0 at T = 0."""
    b = _as_vec(b)
    T = _as_vec(T)
    nT = float(np.linalg.norm(T))
    if nT == 0.0:
        return 0.0
    return nT * float(b @ b) + eta * float(b @ T) ** 2 / nT


def psi_extended_many(b, T: np.ndarray, eta: float) -> np.ndarray:
    """Vectorized one-homogeneous extension over rows of T, shape (N, n)."""
    b = _as_vec(b)
    T = np.asarray(T, dtype=float)
    nT = np.sqrt(np.einsum("...i,...i->...", T, T))
    dots = T @ b
    safe = np.where(nT > 0.0, nT, 1.0)
    return np.where(nT > 0.0, nT * (b @ b) + eta * dots * dots / safe, 0.0)


@dataclass(frozen=True)
class Integrand:
    """A line-energy density b, t -> energy per unit length.

    Subclasses implement ``evaluate``; ``c0`` is a declared constant with
    evaluate(b, t) >= c0 |b|, and evaluate(0, t) must vanish.
    """

    name: str = "abstract"
    params: dict = field(default_factory=dict)
    c0: float = 1.0

    def evaluate(self, b, t) -> float:
        raise NotImplementedError

    def extended(self, b, T) -> float:
        """One-homogeneous extension |T| evaluate(b, T/|T|)."""
        T = _as_vec(T)
        nT = float(np.linalg.norm(T))
        if nT == 0.0:
            return 0.0
        return nT * self.evaluate(b, T / nT)

    def __call__(self, b, t) -> float:
        return self.evaluate(b, t)


@dataclass(frozen=True)
class CubicIntegrand(Integrand):
    """The quadratic anisotropic family with parameter eta in [0, 1].

    c0 = 1 is valid because |b|^2 >= |b| on nonzero integer vectors.
    """

    eta: float = 1.0

    def __init__(self, eta: float):
        if not 0.0 <= eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {eta}")
        object.__setattr__(self, "eta", float(eta))
        super().__init__(name="cubic", params={"eta": float(eta)}, c0=1.0)

    def evaluate(self, b, t) -> float:
        return psi_cubic(b, t, self.eta)


@dataclass(frozen=True)
class IsotropicElasticParams:
    """Isotropic elastic constants: shear modulus, Poisson ratio, spacing."""

    shear_modulus: float
    poisson_ratio: float
    lattice_spacing: float

    def __post_init__(self):
        if not -1.0 <= self.poisson_ratio <= 0.5:
            raise ValueError(f"poisson_ratio must lie in [-1, 1/2], got {self.poisson_ratio}")
        if self.shear_modulus <= 0 or self.lattice_spacing <= 0:
            raise ValueError("shear_modulus and lattice_spacing must be positive")


def psi_crystal(b, t, params: IsotropicElasticParams) -> float:
    """Planar isotropic-crystal line energy, reduced to the quadratic family.

    For poisson_ratio >= 0 this is (mu a0^2 / 2 pi) psi_eta(b_perp, t) with
    eta = nu/(1-nu) and b_perp = (-b2, b1); for nu < 0 the equivalent
    remapping (mu a0^2 / 2 pi (1-nu)) psi_eta'(b, t) with eta' = -nu keeps
    eta inside [0, 1].
    """
    mu, nu, a0 = params.shear_modulus, params.poisson_ratio, params.lattice_spacing
    if nu >= 0.5:
        raise ValueError("poisson_ratio must be < 1/2")
    b = _as_vec(b)
    t = _as_vec(t)
    if b.shape != (2,) or t.shape != (2,):
        raise ValueError("crystal density is two-dimensional (m = n = 2)")
    if nu >= 0.0:
        b_perp = np.array([-b[1], b[0]])
        return (mu * a0**2 / (2.0 * math.pi)) * psi_cubic(b_perp, t, nu / (1.0 - nu))
    return (mu * a0**2 / (2.0 * math.pi * (1.0 - nu))) * psi_cubic(b, t, -nu)


def energy(P: PolyhedralCurrent, integrand, region=None) -> float:
    """Total line energy of a current, optionally restricted to a region.

    ``integrand`` is an Integrand or a plain callable (b, t) -> float.
    """
    if region is not None:
        P = restrict(P, region)
    ev = integrand.evaluate if isinstance(integrand, Integrand) else integrand
    return float(sum(ev(theta, seg.tangent) * seg.length for seg, theta in P.pieces))
