"""The two-placement spectroscopy experiment in software.

A sweep drives the probe gap across the phonon band at both placements
and records the excitation probabilities, optionally with multiplicative
measurement noise.  Peaks of the site-placement signal locate the mode
frequencies; the height ratio against the bond-placement signal assigns
each peak a wavenumber through r = (h_bond/h_site) (g_I^2/g_II^2)
= 1 + cos(k a), and the site heights give the spectral weights.

Noise draws come from a counter-based generator keyed by (seed, config),
so results are reproducible and independent of evaluation order and
thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .bogoliubov import BogoliubovSpectrum, build_spectrum, thermal_occupation
from .errors import ValidationError
from .probe import CouplingPrefactors, prefactors
from .rates import gamma_sweep
from .system import HubbardParams, ProbeTrap, ThermalState

# a resonance main lobe spans 2 pi / T_f in gap; require >= 6 samples on it
MAX_SPACING_WIDTHS = 6

CONFIG_INDEX = {"I": 0, "II": 1}


@dataclass(frozen=True)
class ProbeSystem:
    """Everything a sweep needs, bundled."""

    hubbard: HubbardParams
    trap: ProbeTrap
    thermal: ThermalState
    spectrum: BogoliubovSpectrum
    pre: CouplingPrefactors

    @classmethod
    def assemble(cls, hubbard: HubbardParams, trap: ProbeTrap,
                 thermal: ThermalState, overlaps) -> "ProbeSystem":
        return cls(hubbard=hubbard, trap=trap, thermal=thermal,
                   spectrum=build_spectrum(hubbard),
                   pre=prefactors(trap, overlaps))


@dataclass(frozen=True)
class SweepPlan:
    """Gap grid and acquisition settings for one frequency sweep."""

    gaps: np.ndarray
    t_final: float
    configs: tuple[str, ...] = ("I", "II")
    noise_level: float = 0.0
    seed: int = 0
    samples_per_point: int = 1

    def __post_init__(self):
        gaps = np.asarray(self.gaps, dtype=float)
        object.__setattr__(self, "gaps", gaps)
        if gaps.ndim != 1 or len(gaps) < 8:
            raise ValidationError("gap grid must be a 1D array with >= 8 points")
        if np.any(gaps <= 0):
            raise ValidationError("gaps must be positive")
        diffs = np.diff(gaps)
        if np.any(diffs <= 0):
            raise ValidationError("gap grid must be strictly increasing")
        if not self.t_final > 0:
            raise ValidationError(f"t_final must be positive, got {self.t_final}")
        max_allowed = math.pi / self.t_final / (MAX_SPACING_WIDTHS / 2)
        if float(np.max(diffs)) > max_allowed * (1.0 + 1e-9):
            raise ValidationError(
                f"grid spacing {np.max(diffs):g} too coarse for t_final="
                f"{self.t_final:g}; need <= {max_allowed:g} so each resonance "
                f"spans >= {MAX_SPACING_WIDTHS} points")
        if self.noise_level < 0:
            raise ValidationError("noise_level must be >= 0")
        if self.samples_per_point < 1:
            raise ValidationError("samples_per_point must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError("seed must fit in 64 bits")
        if not self.configs or any(c not in CONFIG_INDEX for c in self.configs):
            raise ValidationError(f"configs must be a nonempty subset of {tuple(CONFIG_INDEX)}")

    @property
    def resonance_width(self) -> float:
        return 2.0 * math.pi / self.t_final

    @classmethod
    def for_spectrum(cls, spectrum: BogoliubovSpectrum, t_final: float | None = None,
                     points_per_width: int = 8, **kwargs) -> "SweepPlan":
        """Grid that resolves every mode of the given spectrum.

        The default t_final = 5 pi / (minimal mode spacing) keeps each
        resonance lobe well separated from its neighbors; the spacing puts
        points_per_width samples on each lobe.
        """
        spacing_min = spectrum.min_spacing
        if t_final is None:
            t_final = 5.0 * math.pi / spacing_min
        omega = spectrum.distinct_omega
        step = (2.0 * math.pi / t_final) / points_per_width
        lo = 0.45 * omega[0]
        hi = 1.06 * omega[-1]
        n = int(math.ceil((hi - lo) / step)) + 1
        gaps = lo + step * np.arange(n)
        return cls(gaps=gaps, t_final=t_final, **kwargs)


@dataclass(frozen=True)
class SweepResult:
    """Clean and noise-dressed sweep signals for both placements."""

    gaps: np.ndarray
    gamma_i_clean: np.ndarray
    gamma_ii_clean: np.ndarray
    gamma_i_noisy: np.ndarray
    gamma_ii_noisy: np.ndarray
    plan: SweepPlan
    clamped: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.gaps)
        arrays = (self.gamma_i_clean, self.gamma_ii_clean,
                  self.gamma_i_noisy, self.gamma_ii_noisy)
        if any(len(a) != n for a in arrays):
            raise ValidationError("sweep arrays must all have the grid's length")

    def clean(self, config: str) -> np.ndarray:
        return {"I": self.gamma_i_clean, "II": self.gamma_ii_clean}[config]

    def noisy(self, config: str) -> np.ndarray:
        return {"I": self.gamma_i_noisy, "II": self.gamma_ii_noisy}[config]


def _noise_rng(seed: int, config: str) -> np.random.Generator:
    key = (int(seed) & (2**64 - 1)) | ((CONFIG_INDEX[config] + 1) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def _dress_with_noise(clean: np.ndarray, config: str, noise_level: float,
                      seed: int, samples_per_point: int):
    """Average of independent multiplicative-noise draws, clamped at zero."""
    if noise_level == 0.0:
        return clean.copy(), 0
    rng = _noise_rng(seed, config)
    draws = rng.standard_normal((len(clean), samples_per_point))
    noisy = clean * (1.0 + noise_level * draws.mean(axis=1))
    clamp_count = int(np.sum(noisy < 0.0))
    np.maximum(noisy, 0.0, out=noisy)
    return noisy, clamp_count


def run_sweep(plan: SweepPlan, system: ProbeSystem, threads: int = 1) -> SweepResult:
    """Evaluate both placements over the gap grid and apply the noise model.

    Sweep points are independent; with threads > 1 the grid is split into
    contiguous chunks.  Values are identical for any thread count, and the
    noise depends only on (seed, config, point index).
    """
    def compute(config: str) -> np.ndarray:
        if threads <= 1 or len(plan.gaps) < 4 * threads:
            return gamma_sweep(plan.gaps, config, system.trap, system.pre,
                               system.spectrum, system.thermal, plan.t_final)
        chunks = np.array_split(plan.gaps, threads)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(
                lambda chunk: gamma_sweep(chunk, config, system.trap, system.pre,
                                          system.spectrum, system.thermal,
                                          plan.t_final),
                chunks))
        return np.concatenate(parts)

    clean_i = compute("I")
    clean_ii = compute("II")
    noisy_i, clamped_i = _dress_with_noise(
        clean_i, "I", plan.noise_level, plan.seed, plan.samples_per_point)
    noisy_ii, clamped_ii = _dress_with_noise(
        clean_ii, "II", plan.noise_level, plan.seed, plan.samples_per_point)
    return SweepResult(
        gaps=plan.gaps, gamma_i_clean=clean_i, gamma_ii_clean=clean_ii,
        gamma_i_noisy=noisy_i, gamma_ii_noisy=noisy_ii, plan=plan,
        clamped={"I": clamped_i, "II": clamped_ii})


def apply_noise(result: SweepResult, noise_level: float, seed: int,
                samples_per_point: int = 1) -> SweepResult:
    """Re-dress an existing sweep with a different noise setting (cheap)."""
    plan = replace(result.plan, noise_level=noise_level, seed=seed,
                   samples_per_point=samples_per_point)
    noisy_i, clamped_i = _dress_with_noise(
        result.gamma_i_clean, "I", noise_level, seed, samples_per_point)
    noisy_ii, clamped_ii = _dress_with_noise(
        result.gamma_ii_clean, "II", noise_level, seed, samples_per_point)
    return SweepResult(
        gaps=result.gaps, gamma_i_clean=result.gamma_i_clean,
        gamma_ii_clean=result.gamma_ii_clean,
        gamma_i_noisy=noisy_i, gamma_ii_noisy=noisy_ii, plan=plan,
        clamped={"I": clamped_i, "II": clamped_ii})


@dataclass(frozen=True)
class Peak:
    omega: float
    height: float
    index: int


def detect_peaks(result: SweepResult, config: str, floor: float = 0.0,
                 rel_floor: float = 0.0) -> list[Peak]:
    """Locate resonances in one measured (noise-dressed) sweep signal.

    Candidates are strict local maxima above
    max(3 * median(signal), floor, rel_floor * max(signal)); of any two
    candidates closer than one resonance width 2 pi / t_final the lower is
    merged away, and each survivor is refined by a quadratic fit through
    the three samples around it.

    rel_floor exists for signals whose census must be exact (the site
    placement): the resonance kernel's first sidelobe is 4.72% of its
    parent peak, so a floor a bit above that fraction of the tallest peak
    admits every true resonance of comparable height and nothing else.
    """
    signal = result.noisy(config)
    gaps = result.gaps
    threshold = max(3.0 * float(np.median(signal)), floor,
                    rel_floor * float(np.max(signal)))
    inner = slice(1, len(signal) - 1)
    is_max = ((signal[inner] > signal[:-2]) & (signal[inner] > signal[2:])
              & (signal[inner] > threshold))
    candidates = np.nonzero(is_max)[0] + 1
    if len(candidates) == 0:
        return []

    # merge: a candidate dies if a taller one sits within a resonance width
    width = result.plan.resonance_width
    heights = signal[candidates]
    positions = gaps[candidates]
    keep = np.ones(len(candidates), dtype=bool)
    for idx in np.argsort(heights)[::-1]:
        if not keep[idx]:
            continue
        close_by = np.abs(positions - positions[idx]) < width
        close_by[idx] = False
        lower = (heights < heights[idx]) | (
            (heights == heights[idx]) & (np.arange(len(candidates)) > idx))
        keep &= ~(close_by & lower)

    peaks = []
    for i in candidates[keep]:
        y_minus, y_0, y_plus = signal[i - 1], signal[i], signal[i + 1]
        denom = y_plus - 2.0 * y_0 + y_minus
        if denom < 0.0:
            shift = 0.5 * (y_minus - y_plus) / denom
            h = (gaps[i + 1] - gaps[i - 1]) / 2.0
            omega = gaps[i] + shift * h
            height = y_0 - 0.125 * (y_minus - y_plus) ** 2 / denom
        else:  # numerically flat top
            omega, height = gaps[i], y_0
        peaks.append(Peak(omega=float(omega), height=float(height), index=int(i)))
    peaks.sort(key=lambda p: p.omega)
    return peaks


@dataclass(frozen=True)
class ReconPoint:
    ka: float
    omega: float
    beta_sq: float


@dataclass(frozen=True)
class DroppedPeak:
    omega: float
    reason: str
    count: int = 1


@dataclass(frozen=True)
class ReconstructedDispersion:
    """Wavenumber-resolved mode list recovered from the two sweeps."""

    points: tuple[ReconPoint, ...]
    dropped_peaks: tuple[DroppedPeak, ...] = ()
    ratio_mode: str = "overlap"
    coupling_ratio: float = float("nan")
    rms_rel_error_omega: float | None = None
    rms_rel_error_beta: float | None = None

    def __post_init__(self):
        for p in self.points:
            if not 0.0 <= p.ka <= math.pi + 1e-12:
                raise ValidationError(f"reconstructed ka={p.ka} outside [0, pi]")
        omegas = [p.omega for p in self.points]
        if any(b < a for a, b in zip(omegas, omegas[1:])):
            raise ValidationError("reconstructed points must be sorted by omega")


# peaks whose rescaled height ratio overshoots the [0, 2] range by more
# than this are discarded instead of clamped
RATIO_CLAMP_SLACK = 0.1


def calibrated_coupling_ratio(peaks_site: list[Peak], peaks_bond: list[Peak],
                              t_final: float) -> float:
    """Rescale so the largest observed bond/site height ratio maps to 2.

    Fallback for when the overlap integrals (hence g_I^2/g_II^2) are not
    trusted: the longest-wavelength mode has weight 1 + cos(ka) -> 2, so
    anchoring the maximum there calibrates the unknown coupling scale.
    """
    window = 2.0 * math.pi / t_final
    raw = [bond.height / site.height
           for site, bond in _match_peaks(peaks_site, peaks_bond, window)]
    if not raw:
        raise ValidationError("no matched peaks to calibrate the coupling ratio")
    return 2.0 / max(raw)


def _match_peaks(peaks_site: list[Peak], peaks_bond: list[Peak], window: float):
    """Pair site peaks with the nearest bond peak within one lobe width."""
    pairs = []
    if not peaks_bond:
        return pairs
    bond_omegas = np.array([p.omega for p in peaks_bond])
    for site in peaks_site:
        j = int(np.argmin(np.abs(bond_omegas - site.omega)))
        if abs(bond_omegas[j] - site.omega) <= window:
            pairs.append((site, peaks_bond[j]))
        else:
            pairs.append((site, None))
    return pairs


def reconstruct(peaks_site: list[Peak], peaks_bond: list[Peak],
                coupling_ratio: float, thermal: ThermalState,
                pre: CouplingPrefactors, t_final: float,
                ratio_mode: str = "overlap") -> ReconstructedDispersion:
    """Assign each matched peak a wavenumber and spectral weight.

    r = (h_bond / h_site) * coupling_ratio equals 1 + cos(ka) for an ideal
    asymptotic measurement; it is clamped to [0, 2] (arccos domain), and a
    value outside by more than RATIO_CLAMP_SLACK drops the peak.  The
    spectral weight comes from inverting the asymptotic site peak height
    h = 2 g_I^2 nu beta^2 n(omega) T^2 with nu = omega / nz.
    """
    window = 2.0 * math.pi / t_final
    points = []
    dropped = []
    matched_bond = 0
    for site, bond in _match_peaks(peaks_site, peaks_bond, window):
        if bond is None:
            dropped.append(DroppedPeak(omega=site.omega, reason="no matching bond peak"))
            continue
        matched_bond += 1
        raw = bond.height / site.height * coupling_ratio
        if raw > 2.0 + RATIO_CLAMP_SLACK or raw < -RATIO_CLAMP_SLACK:
            dropped.append(DroppedPeak(omega=site.omega, reason="ratio out of range"))
            continue
        r = min(max(raw, 0.0), 2.0)
        ka = math.acos(r - 1.0)
        nu_hat = site.omega / pre.nz
        occupation = thermal_occupation(site.omega, thermal)
        beta_sq = site.height / (2.0 * pre.gI_n_sq * nu_hat * occupation * t_final**2)
        points.append(ReconPoint(ka=ka, omega=site.omega, beta_sq=beta_sq))
    unmatched_bond = len(peaks_bond) - matched_bond
    if unmatched_bond > 0:
        dropped.append(DroppedPeak(omega=float("nan"),
                                   reason="bond candidates without a site peak",
                                   count=unmatched_bond))
    points.sort(key=lambda p: p.omega)
    return ReconstructedDispersion(
        points=tuple(points), dropped_peaks=tuple(dropped),
        ratio_mode=ratio_mode, coupling_ratio=coupling_ratio)


@dataclass(frozen=True)
class PointMatch:
    omega_hat: float
    omega_true: float
    ka_hat: float
    ka_true: float
    beta_sq_hat: float
    beta_sq_true: float
    occupation: float
    recovered: bool


@dataclass(frozen=True)
class ReconMetrics:
    rms_rel_omega: float
    rms_rel_beta: float
    coverage: float
    n_modes: int
    n_recovered: int
    matches: tuple[PointMatch, ...]
    tolerance: float


def error_metrics(rd: ReconstructedDispersion, spectrum: BogoliubovSpectrum,
                  thermal: ThermalState, t_final: float,
                  occupation_floor: float = 1e-6) -> ReconMetrics:
    """Compare a reconstruction against the analytic mode grid.

    Each point is matched to the nearest distinct mode frequency; a mode
    counts as recovered when the match lies within one resonance width.
    The beta^2 error is restricted to modes with occupation above
    occupation_floor, where the height inversion is meaningful.
    """
    positive = [m for m in spectrum.modes if m.k > 0]
    positive.sort(key=lambda m: m.omega_k)
    omega_true = np.array([m.omega_k for m in positive])
    ka_true = np.array([m.k for m in positive]) * spectrum.params.a
    beta_true = np.array([m.beta_sq for m in positive])
    tol = 2.0 * math.pi / t_final

    matches = []
    recovered_modes = set()
    for p in rd.points:
        j = int(np.argmin(np.abs(omega_true - p.omega)))
        occupation = thermal_occupation(float(omega_true[j]), thermal)
        recovered = abs(omega_true[j] - p.omega) <= tol
        if recovered:
            recovered_modes.add(j)
        matches.append(PointMatch(
            omega_hat=p.omega, omega_true=float(omega_true[j]),
            ka_hat=p.ka, ka_true=float(ka_true[j]),
            beta_sq_hat=p.beta_sq, beta_sq_true=float(beta_true[j]),
            occupation=occupation, recovered=recovered))

    rec = [m for m in matches if m.recovered]
    if rec:
        rms_omega = math.sqrt(math.fsum(
            ((m.omega_hat - m.omega_true) / m.omega_true) ** 2 for m in rec) / len(rec))
    else:
        rms_omega = float("nan")
    occ_rec = [m for m in rec if m.occupation > occupation_floor]
    if occ_rec:
        rms_beta = math.sqrt(math.fsum(
            ((m.beta_sq_hat - m.beta_sq_true) / m.beta_sq_true) ** 2
            for m in occ_rec) / len(occ_rec))
    else:
        rms_beta = float("nan")
    return ReconMetrics(
        rms_rel_omega=rms_omega, rms_rel_beta=rms_beta,
        coverage=len(recovered_modes) / len(positive),
        n_modes=len(positive), n_recovered=len(recovered_modes),
        matches=tuple(matches), tolerance=tol)


# detection floors of the standard analysis: the site census must be exact
# (floor above the 4.72% kernel sidelobe), while bond candidates are
# filtered by their proximity to a site peak instead
REL_FLOOR_SITE = 0.075
REL_FLOOR_BOND = 0.0


def analyze_sweep(result: SweepResult, pre: CouplingPrefactors,
                  thermal: ThermalState,
                  spectrum: BogoliubovSpectrum | None = None,
                  ratio_mode: str = "overlap",
                  rel_floor_site: float = REL_FLOOR_SITE,
                  rel_floor_bond: float = REL_FLOOR_BOND,
                  occupation_floor: float = 1e-6):
    """Full analysis pipeline: detect, pair, reconstruct, score.

    Returns (reconstruction, metrics); metrics is None when no analytic
    spectrum is supplied.
    """
    t_final = result.plan.t_final
    peaks_site = detect_peaks(result, "I", rel_floor=rel_floor_site)
    peaks_bond = detect_peaks(result, "II", rel_floor=rel_floor_bond)
    if ratio_mode == "overlap":
        ratio = pre.coupling_ratio
    elif ratio_mode == "calibrated":
        ratio = calibrated_coupling_ratio(peaks_site, peaks_bond, t_final)
    else:
        raise ValidationError(f"unknown ratio_mode {ratio_mode!r}")
    rd = reconstruct(peaks_site, peaks_bond, ratio, thermal, pre, t_final,
                     ratio_mode=ratio_mode)
    if spectrum is None:
        return rd, None
    metrics = error_metrics(rd, spectrum, thermal, t_final,
                            occupation_floor=occupation_floor)
    rd = replace(rd, rms_rel_error_omega=metrics.rms_rel_omega,
                 rms_rel_error_beta=metrics.rms_rel_beta)
    return rd, metrics
