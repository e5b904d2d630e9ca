"""Phonon modes of the lattice superfluid.

Linearizing the lattice gas around a uniform condensate turns the
Hamiltonian into independent phonon modes at energies

    omega(k) = sqrt(eps_k^2 + 2 U n0 eps_k),   eps_k = 2 J [1 - cos(k a)],

with coherence factors (u_k, v_k) and a per-mode coupling amplitude
beta_k = sqrt(n0/Ns) (u_k + v_k) seen by a locally coupled probe.  The
k = 0 condensate mode is excluded; its static contribution enters the
transition rates through the n0 term instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ValidationError
from .system import HubbardParams, ThermalState


def single_particle_energy(k, params: HubbardParams):
    """Free-boson band energy 2J[1 - cos(k a)]; accepts scalars or arrays."""
    return 2.0 * params.J * (1.0 - np.cos(np.asarray(k) * params.a))


def brillouin_indices(ns: int) -> np.ndarray:
    """Nonzero mode indices j of the grid k_j = 2 pi j / (ns a).

    For odd ns the grid is symmetric, j in {-(ns-1)/2, ..., -1, 1, ...}.
    For even ns the j = -ns/2 point duplicates +ns/2 (same k modulo the
    reciprocal lattice) and is dropped.
    """
    half = ns // 2
    lo = -half + 1 if ns % 2 == 0 else -half
    js = [j for j in range(lo, half + 1) if j != 0]
    return np.array(js, dtype=int)


@dataclass(frozen=True)
class BogoliubovMode:
    k: float
    eps_k: float
    omega_k: float
    u_k: float
    v_k: float
    beta_k: float

    @property
    def beta_sq(self) -> float:
        return self.beta_k * self.beta_k


@dataclass(frozen=True)
class BogoliubovSpectrum:
    """All nonzero modes of the first Brillouin zone, sorted by |k|.

    Degenerate +-k partners are kept as separate entries; rate sums run
    over the full grid, which is what produces the factor 2 in resonant
    peak heights.
    """

    modes: tuple[BogoliubovMode, ...]
    params: HubbardParams

    def __len__(self) -> int:
        return len(self.modes)

    @cached_property
    def k(self) -> np.ndarray:
        return np.array([m.k for m in self.modes])

    @cached_property
    def eps(self) -> np.ndarray:
        return np.array([m.eps_k for m in self.modes])

    @cached_property
    def omega(self) -> np.ndarray:
        return np.array([m.omega_k for m in self.modes])

    @cached_property
    def beta_sq(self) -> np.ndarray:
        return np.array([m.beta_sq for m in self.modes])

    @cached_property
    def distinct_omega(self) -> np.ndarray:
        """Distinct mode frequencies (the +k branch), ascending."""
        return np.unique(np.round(self.omega, 12))

    @property
    def min_spacing(self) -> float:
        return float(np.min(np.diff(self.distinct_omega)))


def build_spectrum(params: HubbardParams) -> BogoliubovSpectrum:
    """Diagonalize the linearized gas on the finite k grid.

    u_k and v_k follow the convention u_k > 0, v_k <= 0.  Only (u+v)^2
    is observable here, and it is evaluated in the cancellation-free form
    sqrt(2 omega) / (sqrt(E + omega) + sqrt(E - omega)) so that
    beta_k^2 = (n0/Ns) eps_k/omega_k holds to machine precision even for
    strongly mixed long-wavelength modes.
    """
    js = brillouin_indices(params.ns)
    modes = []
    for j in js:
        k = 2.0 * math.pi * j / (params.ns * params.a)
        eps = 2.0 * params.J * (1.0 - math.cos(k * params.a))
        omega = math.sqrt(eps * (eps + 2.0 * params.U * params.n0))
        e_k = eps + params.U * params.n0
        u = math.sqrt((e_k + omega) / (2.0 * omega))
        v = -math.sqrt(max(e_k - omega, 0.0) / (2.0 * omega))
        u_plus_v = math.sqrt(2.0 * omega) / (math.sqrt(e_k + omega) + math.sqrt(max(e_k - omega, 0.0)))
        beta = math.sqrt(params.n0 / params.ns) * u_plus_v
        modes.append(BogoliubovMode(k=k, eps_k=eps, omega_k=omega, u_k=u, v_k=v, beta_k=beta))
    modes.sort(key=lambda m: (abs(m.k), m.k))
    return BogoliubovSpectrum(modes=tuple(modes), params=params)


def thermal_occupation(omega, thermal: ThermalState):
    """Bose-Einstein occupation 1/(exp(beta omega) - 1).

    Stable down to beta*omega ~ 0 through the Laurent series
    1/x - 1/2 + x/12 used below x = 1e-8, and overflow-free for large x.
    Scalars and arrays accepted; omega must be positive.
    """
    omega_arr = np.asarray(omega, dtype=float)
    if np.any(omega_arr <= 0):
        raise ValidationError("thermal occupation requires omega > 0")
    x = thermal.beta * omega_arr
    small = x < 1e-8
    large = x > 30.0
    series = 1.0 / x - 0.5 + x / 12.0
    direct = 1.0 / np.expm1(np.where(small | large, 1.0, x))
    tail = np.exp(-np.where(large, x, 1.0))
    result = np.where(small, series, np.where(large, tail / (1.0 - tail), direct))
    if np.isscalar(omega) or omega_arr.ndim == 0:
        return float(result)
    return result


def bond_pair_weight(k, a: float = 1.0):
    """Mode weight 1 + cos(k a) of the symmetric two-site (bond) coupling."""
    return 1.0 + np.cos(np.asarray(k) * a)


def site_operator_amplitudes(site_pair, spectrum: BogoliubovSpectrum) -> np.ndarray:
    """Per-mode coefficient of b_k^dag in the linearized density operators.

    site_pair is (i, j) with i, j in {0, 1} for a single c_i^dag c_j term,
    or the string "bond" for the symmetric combination sum_{i,j in {0,1}}
    normalized by 1/sqrt(2), so that |amplitude|^2 = beta_k^2 (1 + cos ka)
    reproduces the bond mode weight directly.
    """
    p = spectrum.params
    ka = spectrum.k * p.a
    scale = math.sqrt(p.n0 / p.ns)
    u = np.array([m.u_k for m in spectrum.modes])
    v = np.array([m.v_k for m in spectrum.modes])
    beta = np.array([m.beta_k for m in spectrum.modes])
    if site_pair == "bond":
        return beta * (1.0 + np.exp(1j * ka)) / math.sqrt(2.0)
    i, j = site_pair
    if i not in (0, 1) or j not in (0, 1):
        raise ValidationError(f"site indices must be in {{0, 1}}, got {site_pair}")
    return scale * (u * np.exp(1j * ka * i) + v * np.exp(1j * ka * j))
