"""Band structure, localized orbitals and probe-lattice overlap integrals.

The optical potential V(x) = V0 sin^2(pi x / a) couples plane waves whose
wavevectors differ by one reciprocal lattice vector only, so the Bloch
problem at each quasimomentum is a real symmetric tridiagonal matrix in
the harmonic index.  Localized site orbitals are built as Bloch sums with
phases fixed so every Bloch function is real and positive at the site
center; for a symmetric 1D potential this is the maximally localized real
symmetric choice and is fully deterministic.

Energies here are expressed in recoil units (E_R = 1) unless a custom
boson mass is supplied; lengths are in units of the lattice constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .errors import (DegenerateGaugeError, ConvergenceError, ResolutionError,
                     ValidationError)
from .probe import oscillator_wavefunction, transverse_constant_y, transverse_constant_z
from .system import HubbardParams, ProbeTrap


@dataclass(frozen=True)
class LatticePotential:
    """Sinusoidal lattice V0 sin^2(pi x / a), depth in recoil units.

    mb defaults to pi^2 / (2 a^2), the boson mass that makes the recoil
    energy equal to one; overriding it changes the energy unit of every
    downstream band quantity accordingly.
    """

    v0: float
    a: float = 1.0
    mb: float | None = None

    def __post_init__(self):
        if not self.v0 > 0:
            raise ValidationError(f"lattice depth must be positive, got {self.v0}")
        if not self.a > 0:
            raise ValidationError(f"lattice constant must be positive, got {self.a}")
        if self.mb is None:
            object.__setattr__(self, "mb", math.pi**2 / (2.0 * self.a**2))

    def value(self, x):
        return self.v0 * np.sin(np.pi * np.asarray(x) / self.a) ** 2


def _bloch_matrix(pot: LatticePotential, qa: float, cutoff: int):
    """Diagonal and off-diagonal of the plane-wave Hamiltonian at one q."""
    ls = np.arange(-cutoff, cutoff + 1)
    kappa = (qa / math.pi + 2.0 * ls) * math.pi / pot.a
    diag = kappa**2 / (2.0 * pot.mb) + 0.5 * pot.v0
    off = np.full(2 * cutoff, -0.25 * pot.v0)
    return diag, off


def _lowest_state(pot: LatticePotential, qa: float, cutoff: int):
    diag, off = _bloch_matrix(pot, qa, cutoff)
    try:
        w, v = scipy.linalg.eigh_tridiagonal(diag, off, select="i", select_range=(0, 0))
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError) as err:
        raise ConvergenceError(
            f"Bloch eigensolve failed at qa={qa:g}", cutoff=cutoff) from err
    return float(w[0]), v[:, 0]


@dataclass(frozen=True)
class BandStructure:
    """Lowest band on a symmetric Brillouin-zone grid."""

    potential: LatticePotential
    q: np.ndarray           # quasimomenta, length nq (includes q = 0)
    energies: np.ndarray    # E(q) of the lowest band
    coeffs: np.ndarray      # (nq, 2*cutoff+1) plane-wave coefficients
    cutoff: int

    @property
    def nq(self) -> int:
        return len(self.q)

    def energy_at(self, qa: float) -> float:
        """Lowest-band energy at an arbitrary quasimomentum (fresh solve)."""
        energy, _ = _lowest_state(self.potential, qa, self.cutoff)
        return energy

    @property
    def bandwidth(self) -> float:
        """E(pi/a) - E(0), evaluated exactly at the zone edge and center."""
        return self.energy_at(math.pi) - self.energy_at(0.0)


def band_structure(pot: LatticePotential, cutoff: int = 24, nq: int = 33) -> BandStructure:
    """Diagonalize the lattice in a plane-wave basis on an nq-point q grid.

    cutoff >= 8 keeps the basis converged to well below 1e-10 E_R for
    depths up to 30 E_R; nq must be odd so the grid is symmetric and
    contains q = 0.
    """
    if cutoff < 8:
        raise ValidationError(f"plane-wave cutoff must be >= 8, got {cutoff}")
    if nq < 3 or nq % 2 == 0:
        raise ValidationError(f"nq must be odd and >= 3, got {nq}")
    half = (nq - 1) // 2
    js = np.arange(-half, half + 1)
    qa_grid = 2.0 * math.pi * js / nq
    energies = np.empty(nq)
    coeffs = np.empty((nq, 2 * cutoff + 1))
    for i, qa in enumerate(qa_grid):
        energies[i], coeffs[i] = _lowest_state(pot, qa, cutoff)
    return BandStructure(
        potential=pot, q=qa_grid / pot.a, energies=energies,
        coeffs=coeffs, cutoff=cutoff)


def _fix_gauge(coeffs: np.ndarray) -> np.ndarray:
    """Flip eigenvector signs so each Bloch function is positive at x = 0."""
    sums = coeffs.sum(axis=1)
    if np.any(np.abs(sums) < 1e-12 * np.abs(coeffs).sum(axis=1)):
        raise DegenerateGaugeError(
            "Bloch amplitude vanishes at the site center; cannot fix phases")
    return coeffs * np.sign(sums)[:, None]


@dataclass(frozen=True)
class WannierBasis:
    """Real symmetric site orbitals on the periodic ring of nq cells.

    w0/w1 are samples at sites 0 and 1 on a uniform grid covering the
    stored window;  evaluate() gives the orbitals at arbitrary positions
    through the underlying plane-wave sum, which is what the quadrature
    routines use.
    """

    grid: np.ndarray
    w0: np.ndarray
    w1: np.ndarray
    band_energies: np.ndarray
    cutoff: int
    a: float
    nq: int
    samples_per_period: int
    _q: np.ndarray
    _coeffs: np.ndarray       # gauge-fixed
    _g: np.ndarray            # reciprocal vectors of the plane-wave basis
    potential: LatticePotential

    @property
    def dx(self) -> float:
        return self.a / self.samples_per_period

    def evaluate(self, x, site: int = 0, energy_weighted: bool = False) -> np.ndarray:
        """Orbital of the given site at positions x (vectorized).

        With energy_weighted=True, returns (H w_site)(x) instead, using the
        exact band energies as plane-wave weights.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float)) - site * self.a
        phase_g = np.exp(1j * np.outer(x, self._g))          # (N, npw)
        u = phase_g @ self._coeffs.T                          # (N, nq)
        if energy_weighted:
            u = u * self.band_energies[None, :]
        bloch_phase = np.exp(1j * np.outer(x, self._q))       # (N, nq)
        total = (bloch_phase * u).sum(axis=1) / (self.nq * math.sqrt(self.a))
        return np.real(total)

    @cached_property
    def w0_sq_center(self) -> float:
        """Site-orbital density at its own center, w0(0)^2."""
        return float(self.evaluate(np.array([0.0]))[0]) ** 2

    def ring_integral(self, values: np.ndarray) -> float:
        """Trapezoidal integral over the periodic window (exact on the ring)."""
        return float(np.sum(values) * self.dx)

    @cached_property
    def norm_w0(self) -> float:
        return self.ring_integral(self.w0**2)

    @cached_property
    def overlap_w0_w1(self) -> float:
        return self.ring_integral(self.w0 * self.w1)

    @cached_property
    def hopping_integral(self) -> float:
        """-<w0|H|w1>, the nearest-neighbor tunneling energy."""
        h_w1 = self.evaluate(self.grid, site=1, energy_weighted=True)
        return -self.ring_integral(self.w0 * h_w1)

    @cached_property
    def hopping_from_band(self) -> float:
        """Same quantity from the band's Fourier coefficient (cross-check)."""
        return float(-np.mean(self.band_energies * np.cos(self._q * self.a)))


def wannier_states(bs: BandStructure, ns_periods: int | None = None,
                   samples_per_period: int = 256) -> WannierBasis:
    """Build real localized orbitals from a Bloch band.

    ns_periods sets how many lattice periods the stored sample window
    covers (odd, >= 5, at most the ring size nq; default the full ring,
    for which the trapezoidal integrals and the w1 = shifted-w0 identity
    are exact).
    """
    if ns_periods is None:
        ns_periods = bs.nq
    if ns_periods < 5 or ns_periods % 2 == 0:
        raise ValidationError(f"ns_periods must be odd and >= 5, got {ns_periods}")
    if ns_periods > bs.nq:
        raise ValidationError(
            f"ns_periods={ns_periods} exceeds the ring size nq={bs.nq}")
    if samples_per_period < 64 or samples_per_period % 2 != 0:
        raise ValidationError(
            f"samples_per_period must be even and >= 64, got {samples_per_period}")
    coeffs = _fix_gauge(bs.coeffs)
    cutoff = bs.cutoff
    a = bs.potential.a
    g = 2.0 * math.pi * np.arange(-cutoff, cutoff + 1) / a
    n_total = ns_periods * samples_per_period
    grid = (np.arange(n_total) - n_total // 2) * (a / samples_per_period)
    basis = WannierBasis(
        grid=grid, w0=np.empty(0), w1=np.empty(0),
        band_energies=bs.energies, cutoff=cutoff, a=a, nq=bs.nq,
        samples_per_period=samples_per_period,
        _q=bs.q, _coeffs=coeffs, _g=g, potential=bs.potential)
    w0 = basis.evaluate(grid, site=0)
    if ns_periods == bs.nq:
        # exact translation on the periodic ring
        w1 = np.roll(w0, samples_per_period)
    else:
        w1 = basis.evaluate(grid, site=1)
    object.__setattr__(basis, "w0", w0)
    object.__setattr__(basis, "w1", w1)
    return basis


def hubbard_from_wannier(basis: WannierBasis, g1d: float,
                         ns: int | None = None, n0: float = 1.0,
                         mu: float = 0.0) -> HubbardParams:
    """Extract lattice-model parameters from the localized orbitals.

    J is the tunneling integral -<w0|H|w1>; U = g1d * integral(w0^4).
    Energies come out in the band structure's units (recoil by default);
    use HubbardParams.in_hopping_units() to rescale to J = 1.  ns defaults
    to the orbital ring size and is independent of it physically.
    """
    j_hop = basis.hopping_integral
    u_int = g1d * basis.ring_integral(basis.w0**4)
    return HubbardParams(J=j_hop, U=u_int, n0=n0,
                         ns=basis.nq if ns is None else ns,
                         a=basis.a, mu=mu)


@dataclass(frozen=True)
class OverlapSet:
    """Probe-lattice overlap integrals (all 1/length in a = 1 units).

    phi / phi_prime: site-centered probe density against the same-site and
    neighbor-site orbital densities.  varphi / varphi_prime: bond-centered
    probe density against one site's density and the two-site product.
    x00_i and x00_ii are the combinations entering the squared couplings;
    y00 / z_n0 the closed-form transverse constants; the trap parameters
    used are kept for provenance checks.
    """

    phi: float
    phi_prime: float
    varphi: float
    varphi_prime: float
    varphi_site1: float
    x00_i: float
    x00_ii: float
    y00: float
    z_n0: float
    w0_sq_center: float
    m: float
    nu0: float
    nu: float
    nz: int
    x0: float
    a: float

    def __post_init__(self):
        values = (self.phi, self.phi_prime, self.varphi, self.varphi_prime)
        if not all(math.isfinite(v) for v in values):
            raise ValidationError("overlap integrals must be finite")
        if not self.phi > 0:
            raise ValidationError(f"phi must be positive, got {self.phi}")
        if not self.varphi > 0:
            raise ValidationError(f"varphi must be positive, got {self.varphi}")

    @property
    def locality_ratio(self) -> float:
        """phi'/phi; must be small for the one-site coupling picture."""
        return self.phi_prime / self.phi


def _adaptive_simpson_vector(f, lo: float, hi: float, rel_tol: float,
                             n0: int, max_doublings: int = 14) -> np.ndarray:
    """Composite Simpson on a shared grid for a vector-valued integrand.

    Halves the step until every component changes by less than rel_tol
    relative to itself (with an absolute floor tied to the largest
    component, so near-zero components cannot stall convergence).
    """
    if n0 % 2 == 1:
        n0 += 1

    def simpson(n):
        x = np.linspace(lo, hi, n + 1)
        y = f(x)  # shape (ncomp, n+1)
        h = (hi - lo) / n
        return h / 3.0 * (y[:, 0] + y[:, -1]
                          + 4.0 * y[:, 1:-1:2].sum(axis=1)
                          + 2.0 * y[:, 2:-1:2].sum(axis=1))

    n = n0
    previous = simpson(n)
    for _ in range(max_doublings):
        n *= 2
        current = simpson(n)
        scale = np.abs(current).max()
        allowed = rel_tol * np.maximum(np.abs(current), 1e-3 * scale)
        if np.all(np.abs(current - previous) <= allowed):
            return current
        previous = current
    raise ResolutionError(
        f"overlap quadrature did not reach rel_tol={rel_tol:g} "
        f"after {max_doublings} refinements ({n} panels)")


def overlap_integrals(basis, trap: ProbeTrap, center: float = 0.0,
                      rel_tol: float = 1e-8) -> OverlapSet:
    """All probe-lattice overlaps for a probe centered at `center`.

    The probe's extent along the lattice is its transverse ground state of
    frequency nu0 (that axis is the frozen one lying in the lattice), so
    the resolved width is x0 = 1/sqrt(m nu0).  The quadrature window spans
    each integration center by max(6 x0, 3 a) and is refined by successive
    halving to rel_tol; the initial grid resolves x0 with >= 16 samples.
    """
    a = basis.a
    x0 = 1.0 / math.sqrt(trap.m * trap.nu0)
    span = max(6.0 * x0, 3.0 * a)
    window = 2.0 * span + 0.5 * a  # covers both the site and bond centers
    n_init = max(256, int(math.ceil(16.0 * window / x0)))
    if n_init > 1 << 19:
        raise ResolutionError(
            f"probe width x0={x0:g} too small to resolve on a feasible grid")

    def psi0_sq(x, shift):
        psi = oscillator_wavefunction(0, trap.m, trap.nu0, x - shift)
        return psi * psi

    def integrands(x):
        w0 = basis.evaluate(x, site=0)
        w1 = basis.evaluate(x, site=1)
        site_density = psi0_sq(x, center)
        bond_density = psi0_sq(x, center + 0.5 * a)
        return np.stack([
            site_density * w0 * w0,        # phi
            site_density * w1 * w1,        # phi_prime
            bond_density * w0 * w0,        # varphi (site 0)
            bond_density * w1 * w1,        # varphi (site 1, symmetry audit)
            bond_density * w0 * w1,        # varphi_prime
        ])

    lo = center - span
    hi = center + a / 2.0 + span
    phi, phi_prime, varphi, varphi_site1, varphi_prime = _adaptive_simpson_vector(
        integrands, lo, hi, rel_tol, n_init)

    w0_center = float(basis.evaluate(np.array([center]), site=0)[0])
    return OverlapSet(
        phi=phi, phi_prime=phi_prime, varphi=varphi,
        varphi_prime=varphi_prime, varphi_site1=varphi_site1,
        x00_i=phi, x00_ii=varphi + varphi_prime,
        y00=transverse_constant_y(trap.m, trap.nu0),
        z_n0=transverse_constant_z(trap.nz, trap.m, trap.nu),
        w0_sq_center=w0_center * w0_center,
        m=trap.m, nu0=trap.nu0, nu=trap.nu, nz=trap.nz, x0=x0, a=a)


@dataclass(frozen=True)
class GaussianSiteBasis:
    """Harmonic-approximation orbitals: Gaussians of the well-bottom width.

    Fast stand-in for the Bloch-sum orbitals and an independent cross-check
    oracle; exposes the same evaluate()/a surface used by the quadrature.
    """

    potential: LatticePotential

    @property
    def a(self) -> float:
        return self.potential.a

    @property
    def sigma(self) -> float:
        return self.a / math.pi * self.potential.v0 ** -0.25

    def evaluate(self, x, site: int = 0) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float)) - site * self.a
        s = self.sigma
        return np.exp(-x**2 / (2.0 * s**2)) / (math.pi**0.25 * math.sqrt(s))
