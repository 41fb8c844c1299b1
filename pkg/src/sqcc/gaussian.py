"""Two-mode Gaussian information quantities in shot-noise units.

Covariances are of the symmetric form (a I, c Z; c Z, b I) with vacuum
variance 1.  Bob is assumed to heterodyne and reconciliation is reverse.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .errors import DomainError, NonPhysicalCovariance

TOL = 1e-9
_LN2 = np.log(2.0)


@dataclass(frozen=True)
class TwoModeCovariance:
    a: float
    b: float
    c: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b) and np.isfinite(self.c)):
            raise NonPhysicalCovariance(f"non-finite entries {self}")
        if self.a < 1 - TOL or self.b < 1 - TOL:
            raise NonPhysicalCovariance(f"local variance below vacuum: {self}")
        if self.a * self.b - self.c * self.c < 1 - TOL:
            raise NonPhysicalCovariance(f"ab - c^2 < 1: {self}")

    @classmethod
    def tmsv(cls, V: float) -> "TwoModeCovariance":
        return cls(V, V, np.sqrt(max(V * V - 1.0, 0.0)))

    @classmethod
    def from_lambda(cls, lam: float) -> "TwoModeCovariance":
        if not 0 <= lam < 1:
            raise DomainError("lambda must lie in [0, 1)")
        return cls.tmsv((1 + lam * lam) / (1 - lam * lam))

    def matrix(self) -> np.ndarray:
        """Full 4x4 matrix in (xA, pA, xB, pB) ordering."""
        a, b, c = self.a, self.b, self.c
        return np.array([[a, 0, c, 0],
                         [0, a, 0, -c],
                         [c, 0, b, 0],
                         [0, -c, 0, b]], dtype=float)


@dataclass(frozen=True)
class EntropySpectrum:
    nu1: float
    nu2: float
    nu3: float


def _clamp_unit(nu, what):
    if nu < 1 - TOL:
        raise NonPhysicalCovariance(f"{what} = {nu!r} < 1")
    return max(nu, 1.0)


def symplectic_eigenvalues(cov: TwoModeCovariance) -> tuple[float, float]:
    a, b, c = cov.a, cov.b, cov.c
    delta = a * a + b * b - 2 * c * c
    det = a * b - c * c
    disc = delta * delta - 4 * det * det
    if disc < 0:
        if disc < -TOL * max(1.0, delta * delta):
            raise NonPhysicalCovariance(f"negative discriminant for {cov}")
        disc = 0.0
    root = np.sqrt(disc)
    hi = (delta + root) / 2
    # product form avoids cancellation in the smaller root
    lo = det * det / hi if hi > 0 else 0.0
    return _clamp_unit(np.sqrt(hi), "nu1"), _clamp_unit(np.sqrt(lo), "nu2")


def conditional_eigenvalue(cov: TwoModeCovariance) -> float:
    """Alice's symplectic eigenvalue after Bob heterodynes."""
    return _clamp_unit(cov.a - cov.c * cov.c / (cov.b + 1), "nu3")


def entropy_spectrum(cov: TwoModeCovariance) -> EntropySpectrum:
    n1, n2 = symplectic_eigenvalues(cov)
    return EntropySpectrum(n1, n2, conditional_eigenvalue(cov))


def entropy_g(nu: float) -> float:
    """von Neumann entropy (bits) of a thermal mode with symplectic eigenvalue nu."""
    if nu < 1 - TOL:
        raise DomainError(f"entropy_g needs nu >= 1, got {nu!r}")
    nu = max(float(nu), 1.0)
    p, m = (nu + 1) / 2, (nu - 1) / 2
    return float((xlogy(p, p) - xlogy(m, m)) / _LN2)


def mutual_information(cov: TwoModeCovariance) -> float:
    den = cov.a + 1 - cov.c * cov.c / (cov.b + 1)
    if den <= 0:
        raise NonPhysicalCovariance(f"mutual information undefined for {cov}")
    return float(max(np.log2((cov.a + 1) / den), 0.0))


def holevo_bound(cov: TwoModeCovariance) -> float:
    s = entropy_spectrum(cov)
    chi = entropy_g(s.nu1) + entropy_g(s.nu2) - entropy_g(s.nu3)
    if chi < 0:
        if chi < -TOL:
            raise NonPhysicalCovariance(f"negative Holevo bound {chi!r}")
        chi = 0.0
    return chi


def key_rate(cov: TwoModeCovariance, beta: float, prefactor: float = 1.0) -> float:
    """max(0, prefactor * (beta * I_AB - chi_EB))."""
    if not 0 <= beta <= 1:
        raise DomainError("beta must lie in [0, 1]")
    if not 0 < prefactor <= 1:
        raise DomainError("prefactor must lie in (0, 1]")
    return max(0.0, prefactor * (beta * mutual_information(cov) - holevo_bound(cov)))


def plob_bound(T: float) -> float:
    if not 0 < T < 1:
        raise DomainError("PLOB bound needs 0 < T < 1")
    return float(-np.log1p(-T) / _LN2)


def thermal_entropy(x):
    """g(x) = (x+1) log2(x+1) - x log2 x for mean photon number x."""
    x = np.asarray(x, dtype=float)
    return (xlogy(x + 1, x + 1) - xlogy(x, x)) / _LN2


def takeoka_bound(T: float, n_mode: float) -> float:
    if not 0 < T < 1:
        raise DomainError("Takeoka bound needs 0 < T < 1")
    if n_mode < 0:
        raise DomainError("mean photon number must be nonnegative")
    if np.isinf(n_mode):
        return float(np.log2((1 + T) / (1 - T)))
    return float(thermal_entropy((1 + T) * n_mode / 2) - thermal_entropy((1 - T) * n_mode / 2))


def symplectic_eigenvalues_bruteforce(cov: TwoModeCovariance) -> tuple[float, float]:
    """Moduli of the eigenvalues of i*Omega*V, sorted descending."""
    omega = np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))
    ev = np.abs(np.linalg.eigvals(1j * omega @ cov.matrix()))
    ev = np.sort(ev)[::-1]
    # eigenvalues come in +/- pairs
    return float(ev[0]), float(ev[2])
