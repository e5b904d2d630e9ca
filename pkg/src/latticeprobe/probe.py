"""Harmonic-trap eigenfunctions of the impurity and coupling prefactors.

The probe couples to the gas through products of its trap eigenfunctions
and lattice orbitals.  Everything here reduces to three ingredients: the
normalized oscillator wavefunctions, the Euler-Gamma ratio
gamma_n = Gamma(n + 1/2)/Gamma(n + 1) that controls the even-level matrix
elements, and the closed-form transverse constants that multiply the
lattice-axis overlap integrals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import ProvenanceError, ValidationError
from .system import ProbeTrap

if TYPE_CHECKING:  # pragma: no cover
    from .wannier import OverlapSet


def oscillator_wavefunction(n: int, m: float, nu: float, x):
    """Normalized eigenfunction psi_n of a harmonic trap, evaluated at x.

    Uses the normalized three-term recurrence for Hermite functions
    (weight folded in from the start), which is overflow-free far past
    n = 200; n! and the raw polynomials are never formed.
    """
    if n < 0:
        raise ValidationError(f"oscillator level must be >= 0, got {n}")
    if not (m > 0 and nu > 0):
        raise ValidationError("oscillator requires m > 0 and nu > 0")
    alpha = math.sqrt(m * nu)  # 1/x0
    u = alpha * np.asarray(x, dtype=float)
    h_prev = math.pi ** -0.25 * np.exp(-0.5 * u * u)
    if n == 0:
        result = math.sqrt(alpha) * h_prev
    else:
        h = math.sqrt(2.0) * u * h_prev
        for level in range(2, n + 1):
            h, h_prev = (math.sqrt(2.0 / level) * u * h
                         - math.sqrt((level - 1) / level) * h_prev), h
        result = math.sqrt(alpha) * h
    if np.isscalar(x) or np.asarray(x).ndim == 0:
        return float(result)
    return result


def gamma_ratio(n: int) -> float:
    """gamma_n = Gamma(n + 1/2)/Gamma(n + 1), by upward recurrence from sqrt(pi)."""
    if n < 0:
        raise ValidationError(f"gamma_ratio defined for n >= 0, got {n}")
    value = math.sqrt(math.pi)
    for level in range(n):
        value *= (level + 0.5) / (level + 1.0)
    return value


def selection_amplitude(n: int, m: int) -> float:
    """Dimensionless amplitude of the n <-> m trap transition.

    Zero whenever n + m is odd (parity selection); otherwise
    (-1)^(n+m) sqrt(gamma_n gamma_m), which is positive since n + m is even.
    """
    if (n + m) % 2 != 0:
        return 0.0
    # (-1)^(n+m) = +1 on the surviving even-sum branch
    return math.sqrt(gamma_ratio(n) * gamma_ratio(m))


def transverse_constant_y(m: float, nu0: float) -> float:
    """Y_00 = sqrt(m) (gamma_0/pi) sqrt(nu0): frozen y-axis ground state."""
    return math.sqrt(m) * (gamma_ratio(0) / math.pi) * math.sqrt(nu0)


def transverse_constant_z(n: int, m: float, nu: float) -> float:
    """Z_n0 = (-1)^n sqrt(m) sqrt(gamma_n gamma_0)/pi sqrt(nu): z-axis 0 -> n element."""
    return ((-1) ** n) * math.sqrt(m) * math.sqrt(gamma_ratio(n) * gamma_ratio(0)) / math.pi * math.sqrt(nu)


@dataclass(frozen=True)
class CouplingPrefactors:
    """Squared effective couplings entering the transition probabilities.

    gI_n_sq   -- site placement: (g^2/nu) X_I^2 Y_00^2 Z_n0^2
    gII_n_sq  -- bond placement: 2 (g^2/nu) X_II^2 Y_00^2 Z_n0^2
    g1d_n_sq  -- strictly 1D trap: g^2 m w0(0)^4 gamma_n gamma_0 / pi^2

    Because Z_n0^2 is itself proportional to nu, all three are independent
    of the tunable frequency; the rate formulas multiply by the running nu
    separately.  The raw ingredients are retained for audit.
    """

    gI_n_sq: float
    gII_n_sq: float
    g1d_n_sq: float
    x00_i: float
    x00_ii: float
    y00: float
    z_n0: float
    nz: int
    trap: ProbeTrap

    @property
    def coupling_ratio(self) -> float:
        """g_I^2 / g_II^2, the rescaling used by the two-placement analysis."""
        return self.gI_n_sq / self.gII_n_sq


def prefactors(trap: ProbeTrap, overlaps: "OverlapSet") -> CouplingPrefactors:
    """Assemble the coupling prefactors from trap parameters and overlaps.

    The overlaps must have been computed for the same trap (same mass and
    transverse frequency); a mismatch raises ProvenanceError.
    """
    if not (math.isclose(overlaps.m, trap.m, rel_tol=1e-12)
            and math.isclose(overlaps.nu0, trap.nu0, rel_tol=1e-12)):
        raise ProvenanceError(
            "overlap integrals were computed for a different trap "
            f"(m={overlaps.m:g}, nu0={overlaps.nu0:g} vs m={trap.m:g}, nu0={trap.nu0:g})")
    n = trap.nz
    y00 = transverse_constant_y(trap.m, trap.nu0)
    z_n0 = transverse_constant_z(n, trap.m, trap.nu)
    g_sq = trap.g * trap.g
    common = g_sq / trap.nu * y00**2 * z_n0**2
    gI = common * overlaps.x00_i**2
    gII = 2.0 * common * overlaps.x00_ii**2
    g1d = g_sq * trap.m * overlaps.w0_sq_center**2 * gamma_ratio(n) * gamma_ratio(0) / math.pi**2
    return CouplingPrefactors(
        gI_n_sq=gI, gII_n_sq=gII, g1d_n_sq=g1d,
        x00_i=overlaps.x00_i, x00_ii=overlaps.x00_ii,
        y00=y00, z_n0=z_n0, nz=n, trap=trap,
    )
