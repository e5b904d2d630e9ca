"""First-order transition probabilities of the driven probe.

The probability of finding the probe in its target level after time t is
a sum of three pieces: a static term driven by the condensate density,
phonon absorption (resonant when the probe gap matches a mode frequency)
and phonon emission (never resonant for positive gaps, a small
background).  Both are weighted by the time-domain resonance kernels

    lambda1(w, t) = 2 [1 - cos(w t)] / w^2 = 4 sin^2(w t / 2) / w^2
    lambda2(d, t) = lambda1(d, t) for d != 0, continued to t^2 at d = 0.

Both kernels share one guarded implementation: below |w t| = 1e-6 the
series t^2 (1 - (w t)^2 / 12) avoids the 0/0 cancellation and makes the
resonant value t^2 exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bogoliubov import BogoliubovSpectrum, bond_pair_weight, thermal_occupation
from .errors import LocalityError, PerturbativeBreakdownError, ValidationError
from .probe import CouplingPrefactors
from .system import ProbeTrap, ThermalState

_GUARD = 1e-6

# first-order probabilities above this are no longer trustworthy
PERTURBATIVE_FLAG = 0.1
PERTURBATIVE_HARD = 1.0

CONFIGS = ("I", "II", "1D")


def _resonance_kernel(omega, t):
    omega = np.asarray(omega, dtype=float)
    x = omega * t
    small = np.abs(x) < _GUARD
    omega_safe = np.where(small, 1.0, omega)
    s = np.sin(0.5 * x)
    exact = 4.0 * s * s / (omega_safe * omega_safe)
    series = t * t * (1.0 - x * x / 12.0)
    return np.where(small, series, exact)


def lambda1(omega, t):
    """2[1 - cos(omega t)]/omega^2, computed cancellation-free."""
    if np.any(np.asarray(t) < 0):
        raise ValidationError("lambda1 requires t >= 0")
    result = _resonance_kernel(omega, t)
    if np.isscalar(omega) and np.isscalar(t):
        return float(result)
    return result


def lambda2(delta, t):
    """lambda1 continued through the resonance: equals t^2 at delta = 0."""
    if np.any(np.asarray(t) < 0):
        raise ValidationError("lambda2 requires t >= 0")
    result = _resonance_kernel(delta, t)
    if np.isscalar(delta) and np.isscalar(t):
        return float(result)
    return result


@dataclass(frozen=True)
class RateBreakdown:
    """Transition probability split into its physical contributions.

    total = prefactor_sq * (static_term + sum(absorption) + sum(emission)),
    composed exactly this way (math.fsum over the per-mode terms).  The
    absorption entries carry the occupation factor n(omega_k); emission
    carries 1 + n(omega_k).
    """

    prefactor_sq: float
    static_term: float
    absorption: np.ndarray
    emission: np.ndarray
    total: float
    perturbative_ok: bool


def transition_probability(gap: float, prefactor_sq: float,
                           spectrum: BogoliubovSpectrum, thermal: ThermalState,
                           t: float,
                           mode_weight: Callable | None = None) -> RateBreakdown:
    """Probability of the 0 -> target transition after time t.

    mode_weight maps wavenumber k to a dimensionless weight (None means 1
    for every mode); its k = 0 limit multiplies the static condensate term,
    which is what produces the doubled static term of the bond placement.
    A gap exactly on a mode frequency is fine: the kernel's guarded branch
    is the continuous resonant limit.
    """
    if not gap > 0:
        raise ValidationError(f"probe gap must be positive, got {gap}")
    if t < 0:
        raise ValidationError(f"time must be >= 0, got {t}")
    params = spectrum.params
    if mode_weight is None:
        weights = np.ones(len(spectrum))
        static_weight = 1.0
    else:
        weights = np.asarray(mode_weight(spectrum.k), dtype=float)
        static_weight = float(mode_weight(np.array([0.0]))[0])
    occ = thermal_occupation(spectrum.omega, thermal)
    static = static_weight * lambda1(gap, t) * params.n0**2
    absorption = weights * spectrum.beta_sq * lambda2(gap - spectrum.omega, t) * occ
    emission = weights * spectrum.beta_sq * lambda1(gap + spectrum.omega, t) * (1.0 + occ)
    total = prefactor_sq * (static + math.fsum(absorption) + math.fsum(emission))
    if total > PERTURBATIVE_HARD:
        raise PerturbativeBreakdownError(
            f"first-order probability {total:g} exceeds 1; reduce g or t")
    return RateBreakdown(
        prefactor_sq=prefactor_sq, static_term=static,
        absorption=absorption, emission=emission, total=total,
        perturbative_ok=total <= PERTURBATIVE_FLAG)


def _config_pieces(config: str, trap: ProbeTrap, pre: CouplingPrefactors,
                   spectrum: BogoliubovSpectrum):
    """Prefactor and weight function for one probe configuration."""
    a = spectrum.params.a
    if config == "I":
        return pre.gI_n_sq, None
    if config == "II":
        if not trap.satisfies_locality(a):
            raise LocalityError(
                f"bond placement requires m*nu0 > 4/a^2; got m*nu0 = {trap.m * trap.nu0:g}")
        return pre.gII_n_sq, lambda k: bond_pair_weight(k, a)
    if config == "1D":
        return pre.g1d_n_sq, None
    raise ValidationError(f"unknown configuration {config!r}; expected one of {CONFIGS}")


def gamma_config(config: str, trap: ProbeTrap, pre: CouplingPrefactors,
                 spectrum: BogoliubovSpectrum, thermal: ThermalState,
                 t: float) -> RateBreakdown:
    """Transition probability for one placement at the trap's own gap nz*nu."""
    g_sq, weight = _config_pieces(config, trap, pre, spectrum)
    gap = trap.nz * trap.nu
    return transition_probability(gap, g_sq * trap.nu, spectrum, thermal, t,
                                  mode_weight=weight)


def gamma_sweep(gaps: np.ndarray, config: str, trap: ProbeTrap,
                pre: CouplingPrefactors, spectrum: BogoliubovSpectrum,
                thermal: ThermalState, t: float) -> np.ndarray:
    """Vectorized transition probabilities over a grid of probe gaps.

    Sweeping the gap means sweeping the tunable trap frequency nu = gap/nz,
    which also scales the overall prefactor linearly; the squared couplings
    themselves are nu-independent.  Matches gamma_config pointwise to one
    part in 1e13 (fixed mode order, pairwise summation).
    """
    gaps = np.asarray(gaps, dtype=float)
    if np.any(gaps <= 0):
        raise ValidationError("all swept gaps must be positive")
    if trap.nz == 0:
        raise ValidationError("sweeping requires a nonzero target level nz")
    g_sq, weight = _config_pieces(config, trap, pre, spectrum)
    params = spectrum.params
    if weight is None:
        weights = np.ones(len(spectrum))
        static_weight = 1.0
    else:
        weights = np.asarray(weight(spectrum.k), dtype=float)
        static_weight = float(weight(np.array([0.0]))[0])
    occ = thermal_occupation(spectrum.omega, thermal)
    braces = static_weight * lambda1(gaps, t) * params.n0**2
    for idx in range(len(spectrum)):
        w_beta = weights[idx] * spectrum.beta_sq[idx]
        braces = braces + w_beta * (
            lambda2(gaps - spectrum.omega[idx], t) * occ[idx]
            + lambda1(gaps + spectrum.omega[idx], t) * (1.0 + occ[idx]))
    nu = gaps / trap.nz
    totals = g_sq * nu * braces
    worst = float(np.max(totals))
    if worst > PERTURBATIVE_HARD:
        raise PerturbativeBreakdownError(
            f"first-order probability {worst:g} exceeds 1 somewhere in the sweep")
    return totals


def asymptotic_peak_height(config: str, mode, pre: CouplingPrefactors,
                           thermal: ThermalState, t_final: float,
                           a: float = 1.0,
                           min_spacing: float | None = None) -> float:
    """Long-time resonant peak height at one mode.

    2 g^2 nu beta_k^2 n(omega_k) T^2, times (1 + cos ka) for the bond
    placement; the factor 2 is the +-k degeneracy of the mode grid and nu
    is the trap frequency that puts the gap on this mode.  Valid once T
    exceeds the inverse spacing to the neighboring modes; if min_spacing
    is given and t_final * min_spacing < 10 a warning is issued.
    """
    if min_spacing is not None and t_final * min_spacing < 10.0:
        import warnings
        warnings.warn(
            f"t_final={t_final:g} does not resolve mode spacing {min_spacing:g}; "
            "asymptotic peak heights are unreliable", stacklevel=2)
    if config == "I":
        g_sq, weight = pre.gI_n_sq, 1.0
    elif config == "II":
        g_sq, weight = pre.gII_n_sq, float(bond_pair_weight(mode.k, a))
    elif config == "1D":
        g_sq, weight = pre.g1d_n_sq, 1.0
    else:
        raise ValidationError(f"unknown configuration {config!r}; expected one of {CONFIGS}")
    nu = mode.omega_k / pre.nz
    occ = thermal_occupation(mode.omega_k, thermal)
    return 2.0 * g_sq * nu * mode.beta_sq * occ * t_final**2 * weight
