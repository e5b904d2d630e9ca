"""Parameter containers, unit conventions and validation.

All core modules work in dimensionless units: hbar = 1, lattice constant
a = 1 and the hopping energy J = 1 (the lattice module alternatively uses
the recoil energy as its natural scale).  Conversion from laboratory (SI)
numbers happens only at the boundary, through :class:`UnitSystem` and
:func:`si_to_dimensionless`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

from .errors import ValidationError

# Exact SI defining constants (2019 redefinition).
PLANCK_H = 6.62607015e-34  # J s
HBAR_SI = PLANCK_H / (2.0 * math.pi)
BOLTZMANN_KB = 1.380649e-23  # J / K


class EnergyUnit(enum.Enum):
    """Which energy sets the dimensionless scale."""

    HOPPING = "hopping"  # J = 1
    RECOIL = "recoil"    # E_R = 1


class Placement(enum.Enum):
    """Probe position within the lattice cell."""

    SITE_MINIMUM = "site_minimum"   # centered on a potential minimum (one site)
    BOND_MAXIMUM = "bond_maximum"   # centered on a maximum (two adjacent sites)


@dataclass(frozen=True)
class HubbardParams:
    """Lattice-model parameters of the superfluid.

    ``mu`` is carried for completeness but enters none of the implemented
    quantities (the phonon dispersion does not depend on it).
    """

    J: float
    U: float
    n0: float = 1.0
    ns: int = 65
    a: float = 1.0
    mu: float = 0.0

    def __post_init__(self):
        if not self.J > 0:
            raise ValidationError(f"hopping J must be positive, got {self.J}")
        if self.U < 0:
            raise ValidationError(f"interaction U must be >= 0, got {self.U}")
        if not self.n0 > 0:
            raise ValidationError(f"condensate fraction n0 must be positive, got {self.n0}")
        if self.ns < 3:
            raise ValidationError(f"site count ns must be >= 3, got {self.ns}")
        if not self.a > 0:
            raise ValidationError(f"lattice constant a must be positive, got {self.a}")

    @property
    def superfluid(self) -> bool:
        """True in the regime where the phonon linearization is trusted."""
        return self.U == 0.0 or self.J / self.U >= 1.0

    def in_hopping_units(self) -> "HubbardParams":
        """Rescale energies so that J = 1 (lengths unchanged)."""
        return replace(self, J=1.0, U=self.U / self.J, mu=self.mu / self.J)


@dataclass(frozen=True)
class ProbeTrap:
    """Impurity trap parameters.

    nu is the tunable trap frequency along z (the measurement axis,
    orthogonal to the lattice); nu0 is the fixed frequency of the two
    transverse axes, one of which lies along the lattice.  nz is the
    target level of the swept transition (must be even; odd levels are
    parity-forbidden).  g is the bare impurity-gas contact coupling.
    """

    nu: float
    nu0: float
    m: float
    g: float
    nz: int = 2
    placement: Placement = Placement.SITE_MINIMUM

    def __post_init__(self):
        if not self.nu > 0:
            raise ValidationError(f"trap frequency nu must be positive, got {self.nu}")
        if not self.nu0 > 0:
            raise ValidationError(f"trap frequency nu0 must be positive, got {self.nu0}")
        if not self.m > 0:
            raise ValidationError(f"impurity mass must be positive, got {self.m}")
        if self.nz < 0:
            raise ValidationError(f"target level nz must be >= 0, got {self.nz}")

    @property
    def x0(self) -> float:
        """Ground-state length of the tunable (z) axis, 1/sqrt(m nu)."""
        return 1.0 / math.sqrt(self.m * self.nu)

    @property
    def x0_lattice(self) -> float:
        """Ground-state length along the lattice axis, 1/sqrt(m nu0)."""
        return 1.0 / math.sqrt(self.m * self.nu0)

    def satisfies_locality(self, a: float = 1.0) -> bool:
        """m nu0 > 4/a**2, i.e. the probe touches at most two sites."""
        return self.m * self.nu0 > 4.0 / a**2


@dataclass(frozen=True)
class ThermalState:
    """Thermal gas state, beta = 1/(k_B T) in dimensionless energy units."""

    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValidationError(f"inverse temperature beta must be positive, got {self.beta}")


@dataclass(frozen=True)
class Violation:
    code: str
    severity: str  # "error" | "warning" | "hint"
    message: str


@dataclass(frozen=True)
class ValidationReport:
    """Collected constraint violations; empty means all checks passed."""

    entries: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.entries

    def has(self, code: str) -> bool:
        return any(v.code == code for v in self.entries)

    def errors(self) -> tuple[Violation, ...]:
        return tuple(v for v in self.entries if v.severity == "error")


# Couplings larger than this (in J*a units) make first-order perturbation
# theory suspect for typical sweep times.
PERTURBATIVE_G_HINT = 0.1


def validate_system(hubbard: HubbardParams, trap: ProbeTrap,
                    thermal: ThermalState) -> ValidationReport:
    """Report-only aggregation of the protocol's validity constraints.

    Hard failures are raised by the consumers (e.g. bond-placement rates
    refuse to run without locality); this merely lists what is violated.
    """
    entries = []
    if trap.nz % 2 != 0:
        entries.append(Violation(
            "parity", "error",
            f"target level nz={trap.nz} is odd; only even levels are reachable "
            "from the ground state"))
    if not trap.satisfies_locality(hubbard.a):
        entries.append(Violation(
            "locality", "error",
            f"m*nu0 = {trap.m * trap.nu0:g} <= 4/a^2 = {4.0 / hubbard.a**2:g}; "
            "bond placement would couple more than two sites"))
    if not hubbard.superfluid:
        entries.append(Violation(
            "superfluid", "warning",
            f"J/U = {hubbard.J / hubbard.U:g} < 1; phonon linearization is "
            "unreliable outside the superfluid regime"))
    if abs(trap.g) > PERTURBATIVE_G_HINT * hubbard.J * hubbard.a:
        entries.append(Violation(
            "perturbative", "hint",
            f"coupling g = {trap.g:g} is not small against J*a; watch the "
            "computed probabilities"))
    # thermal carries no constraint beyond beta > 0, enforced at construction
    del thermal
    return ValidationReport(tuple(entries))


@dataclass(frozen=True)
class UnitSystem:
    """Bridge between one SI energy/length scale and dimensionless values."""

    energy_unit: EnergyUnit
    energy_joule: float
    a_m: float

    def __post_init__(self):
        if not self.energy_joule > 0 or not self.a_m > 0:
            raise ValidationError("unit scales must be positive")

    def beta_for_temperature(self, temperature_k: float) -> float:
        if not temperature_k > 0:
            raise ValidationError(f"temperature must be positive, got {temperature_k}")
        return self.energy_joule / (BOLTZMANN_KB * temperature_k)

    def temperature_for_beta(self, beta: float) -> float:
        return self.energy_joule / (BOLTZMANN_KB * beta)

    def energy_from_hz(self, f_hz: float) -> float:
        return PLANCK_H * f_hz / self.energy_joule

    def energy_to_hz(self, e: float) -> float:
        return e * self.energy_joule / PLANCK_H

    def length_from_m(self, x_m: float) -> float:
        return x_m / self.a_m

    def length_to_m(self, x: float) -> float:
        return x * self.a_m

    def mass_from_kg(self, m_kg: float) -> float:
        # hbar = 1, so [mass] = hbar^2 / (energy * length^2)
        return m_kg * self.a_m**2 * self.energy_joule / HBAR_SI**2

    def mass_to_kg(self, m: float) -> float:
        return m * HBAR_SI**2 / (self.a_m**2 * self.energy_joule)


def recoil_energy_hz(boson_mass_kg: float, wavelength_m: float) -> float:
    """Recoil frequency E_R/h for a lattice made of two counter-propagating beams."""
    if not boson_mass_kg > 0 or not wavelength_m > 0:
        raise ValidationError("mass and wavelength must be positive")
    k_l = 2.0 * math.pi / wavelength_m
    return HBAR_SI * k_l**2 / (2.0 * boson_mass_kg) / (2.0 * math.pi)


@dataclass(frozen=True)
class PhysicalInputs:
    """Laboratory-frame inputs for the SI adapter.

    Frequencies are plain Hz (energies divided by h).  The coupling g is
    accepted directly in dimensionless J*a units; the protocol only ever
    constrains it to be perturbatively small.
    """

    temperature_k: float
    hopping_hz: float
    interaction_hz: float
    wavelength_m: float
    boson_mass_kg: float
    impurity_mass_kg: float
    nu_hz: float
    nu0_hz: float
    g: float = 1e-5
    n0: float = 1.0
    ns: int = 65
    nz: int = 2
    placement: Placement = Placement.SITE_MINIMUM

    def __post_init__(self):
        positive = {
            "temperature_k": self.temperature_k,
            "hopping_hz": self.hopping_hz,
            "wavelength_m": self.wavelength_m,
            "boson_mass_kg": self.boson_mass_kg,
            "impurity_mass_kg": self.impurity_mass_kg,
            "nu_hz": self.nu_hz,
            "nu0_hz": self.nu0_hz,
        }
        for name, value in positive.items():
            if not value > 0:
                raise ValidationError(f"{name} must be positive, got {value}")
        if self.interaction_hz < 0:
            raise ValidationError(f"interaction_hz must be >= 0, got {self.interaction_hz}")


@dataclass(frozen=True)
class DimensionlessSystem:
    """Result of the SI adapter: parameters in J = 1, a = 1 units."""

    hubbard: HubbardParams
    trap: ProbeTrap
    thermal: ThermalState
    units: UnitSystem
    boson_mass: float  # dimensionless, needed by the lattice module


def si_to_dimensionless(inputs: PhysicalInputs) -> DimensionlessSystem:
    """Convert SI inputs to the internal J = 1, a = lambda/2 = 1 convention."""
    units = UnitSystem(
        energy_unit=EnergyUnit.HOPPING,
        energy_joule=PLANCK_H * inputs.hopping_hz,
        a_m=inputs.wavelength_m / 2.0,
    )
    hubbard = HubbardParams(
        J=1.0,
        U=inputs.interaction_hz / inputs.hopping_hz,
        n0=inputs.n0,
        ns=inputs.ns,
        a=1.0,
    )
    trap = ProbeTrap(
        nu=units.energy_from_hz(inputs.nu_hz),
        nu0=units.energy_from_hz(inputs.nu0_hz),
        m=units.mass_from_kg(inputs.impurity_mass_kg),
        g=inputs.g,
        nz=inputs.nz,
        placement=inputs.placement,
    )
    thermal = ThermalState(beta=units.beta_for_temperature(inputs.temperature_k))
    return DimensionlessSystem(
        hubbard=hubbard, trap=trap, thermal=thermal, units=units,
        boson_mass=units.mass_from_kg(inputs.boson_mass_kg),
    )


def dimensionless_to_si(system: DimensionlessSystem) -> PhysicalInputs:
    """Inverse of :func:`si_to_dimensionless` (round-trips to ~1e-15 relative)."""
    units = system.units
    return PhysicalInputs(
        temperature_k=units.temperature_for_beta(system.thermal.beta),
        hopping_hz=units.energy_to_hz(system.hubbard.J),
        interaction_hz=units.energy_to_hz(system.hubbard.U),
        wavelength_m=2.0 * units.a_m,
        boson_mass_kg=units.mass_to_kg(system.boson_mass),
        impurity_mass_kg=units.mass_to_kg(system.trap.m),
        nu_hz=units.energy_to_hz(system.trap.nu),
        nu0_hz=units.energy_to_hz(system.trap.nu0),
        g=system.trap.g,
        n0=system.hubbard.n0,
        ns=system.hubbard.ns,
        nz=system.trap.nz,
        placement=system.trap.placement,
    )
