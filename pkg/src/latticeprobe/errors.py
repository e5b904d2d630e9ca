"""Exception types shared across the package."""


class LatticeProbeError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(LatticeProbeError, ValueError):
    """Invalid parameters or configuration (CLI exit code 2)."""


class ConfigError(ValidationError):
    """Malformed or inconsistent run configuration."""


class ConvergenceError(LatticeProbeError, RuntimeError):
    """A numerical routine failed to converge (CLI exit code 3)."""

    def __init__(self, message, cutoff=None):
        super().__init__(message)
        self.cutoff = cutoff


class ResolutionError(ConvergenceError):
    """Quadrature grid cannot resolve the integrand at the requested tolerance."""


class DegenerateGaugeError(LatticeProbeError, RuntimeError):
    """Bloch phase fixing failed (vanishing amplitude at the site center)."""


class LocalityError(ValidationError):
    """Probe transverse confinement too weak for two-site (bond) coupling."""


class PerturbativeBreakdownError(LatticeProbeError, RuntimeError):
    """First-order transition probability exceeded 1; result is meaningless."""


class ProvenanceError(ValidationError):
    """Inputs built from mismatched trap parameters were combined."""
