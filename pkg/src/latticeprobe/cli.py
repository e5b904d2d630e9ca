"""Command-line interface.

Subcommands: spectrum | wannier | overlaps | sweep | reconstruct.  Every
run reads a JSON config (flags and LATTICEPROBE_* environment variables
override file values), writes its tables to --out and drops a manifest
with the fully resolved configuration next to them.

Exit codes: 0 success, 2 invalid configuration or parameters, 3 numerical
non-convergence.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bogoliubov import build_spectrum
from .errors import ConfigError, ConvergenceError, LatticeProbeError, ValidationError
from .output import load_config, read_csv_columns, write_manifest, write_table
from .probe import prefactors
from .protocol import (ProbeSystem, SweepPlan, SweepResult, analyze_sweep,
                       run_sweep)
from .rates import gamma_sweep  # noqa: F401  (re-exported for scripting)
from .system import (HubbardParams, Placement, PhysicalInputs, ProbeTrap,
                     ThermalState, recoil_energy_hz, si_to_dimensionless,
                     validate_system)
from .wannier import (LatticePotential, band_structure, overlap_integrals,
                      wannier_states)

ENV_PREFIX = "LATTICEPROBE_"


def _env_override(name: str, current):
    raw = os.environ.get(ENV_PREFIX + name.upper())
    if raw is None:
        return current
    if isinstance(current, int) and not isinstance(current, bool):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    return raw


def _build_hubbard(cfg: dict) -> tuple[HubbardParams, float]:
    """Hubbard parameters in hopping units, plus J in recoil units.

    The second value is the hopping energy in the lattice module's recoil
    units (needed to anchor temperatures when J was derived rather than
    given); it is 1.0 when an explicit 'hubbard' section is used, since
    the caller then quotes hopping_hz for J directly.
    """
    explicit = "hubbard" in cfg
    derive = bool(cfg.get("derive_from_lattice", False))
    if explicit == derive:
        raise ConfigError(
            "exactly one of a 'hubbard' section or 'derive_from_lattice: true' "
            "must be present")
    if explicit:
        h = cfg["hubbard"]
        hubbard = HubbardParams(J=float(h["J"]), U=float(h["U"]),
                                n0=float(h.get("n0", 1.0)), ns=int(h.get("ns", 65)),
                                a=float(h.get("a", 1.0)), mu=float(h.get("mu", 0.0)))
        return hubbard, 1.0
    basis = _build_basis(cfg)
    g1d = float(cfg.get("g1d", 0.0))
    from .wannier import hubbard_from_wannier
    derived = hubbard_from_wannier(basis, g1d,
                                   ns=int(cfg.get("hubbard_ns", basis.nq)),
                                   n0=float(cfg.get("n0", 1.0)))
    return derived.in_hopping_units(), derived.J


def _build_basis(cfg: dict):
    lat = cfg.get("lattice")
    if lat is None:
        raise ConfigError("this command needs a 'lattice' section (v0_er, ...)")
    pot = LatticePotential(v0=float(lat["v0_er"]), a=float(lat.get("a", 1.0)))
    bs = band_structure(pot, cutoff=int(lat.get("cutoff", 24)),
                        nq=int(lat.get("nq", 33)))
    return wannier_states(bs, samples_per_period=int(lat.get("samples_per_period", 256)))


def _build_trap(cfg: dict) -> ProbeTrap:
    p = cfg.get("probe")
    if p is None:
        raise ConfigError("this command needs a 'probe' section")
    placement = Placement(p.get("placement", "site_minimum"))
    return ProbeTrap(nu=float(p.get("nu", 1.0)), nu0=float(p["nu0"]),
                     m=float(p["m"]), g=float(p["g"]),
                     nz=int(p.get("nz", 2)), placement=placement)


def _build_thermal(cfg: dict, hubbard: HubbardParams, j_recoil: float) -> ThermalState:
    """Inverse temperature in the run's energy units (J = hubbard.J).

    With an explicit 'hubbard' section, physical.hopping_hz is the SI
    frequency of the hopping energy; when J was derived from the lattice,
    the recoil frequency from (boson_mass_kg, wavelength_m) anchors it.
    """
    th = cfg.get("thermal", {})
    if "beta" in th:
        return ThermalState(beta=float(th["beta"]))
    phys = cfg.get("physical")
    if phys is None:
        raise ConfigError("need either thermal.beta or a 'physical' section")
    from .system import BOLTZMANN_KB, PLANCK_H
    temperature_k = float(phys["temperature_nk"]) * 1e-9
    if "hopping_hz" in phys:
        hopping_hz = float(phys["hopping_hz"])
    elif "boson_mass_kg" in phys and "wavelength_m" in phys:
        er_hz = recoil_energy_hz(float(phys["boson_mass_kg"]),
                                 float(phys["wavelength_m"]))
        hopping_hz = j_recoil * er_hz
    else:
        raise ConfigError("physical section needs hopping_hz or "
                          "(boson_mass_kg, wavelength_m)")
    # energy unit = (hopping energy)/J, so beta*J = h*hopping_hz/(kB*T)
    beta = PLANCK_H * hopping_hz / (BOLTZMANN_KB * temperature_k * hubbard.J)
    return ThermalState(beta=beta)


def _build_plan(cfg: dict, spectrum, args) -> SweepPlan:
    sw = dict(cfg.get("sweep", {}))
    noise = args.noise if args.noise is not None else float(sw.get("noise", 0.0))
    noise = _env_override("noise", noise)
    seed = args.seed if args.seed is not None else int(sw.get("seed", 0))
    seed = _env_override("seed", seed)
    samples = int(sw.get("samples_per_point", 1))
    t_final = sw.get("t_final")
    kwargs = dict(noise_level=float(noise), seed=int(seed),
                  samples_per_point=samples)
    if "gap_min" in sw and "gap_max" in sw and "spacing" in sw:
        lo, hi, step = (float(sw["gap_min"]), float(sw["gap_max"]),
                        float(sw["spacing"]))
        n = int(math.ceil((hi - lo) / step)) + 1
        return SweepPlan(gaps=lo + step * np.arange(n),
                         t_final=float(t_final), **kwargs)
    return SweepPlan.for_spectrum(
        spectrum, t_final=None if t_final is None else float(t_final),
        points_per_width=int(sw.get("points_per_width", 8)), **kwargs)


def _validated_system(cfg: dict):
    hubbard, j_recoil = _build_hubbard(cfg)
    trap = _build_trap(cfg)
    thermal = _build_thermal(cfg, hubbard, j_recoil)
    report = validate_system(hubbard, trap, thermal)
    for violation in report.entries:
        if violation.severity == "error":
            raise ValidationError(f"{violation.code}: {violation.message}")
        print(f"warning ({violation.code}): {violation.message}", file=sys.stderr)
    return hubbard, trap, thermal


def cmd_spectrum(cfg: dict, args) -> int:
    hubbard, _ = _build_hubbard(cfg)
    spectrum = build_spectrum(hubbard)
    rows = [(m.k * hubbard.a, m.eps_k, m.omega_k, m.beta_sq)
            for m in spectrum.modes]
    out = Path(args.out)
    path = write_table(out / "spectrum", ["k_a", "eps_k", "omega_k", "beta_k_sq"],
                       rows, args.format)
    write_manifest(out / "spectrum_manifest.json", "spectrum", cfg, [path])
    print(f"wrote {path} ({len(rows)} modes)")
    return 0


def cmd_wannier(cfg: dict, args) -> int:
    basis = _build_basis(cfg)
    rows = zip(basis.grid, basis.w0, basis.w1)
    out = Path(args.out)
    path = write_table(out / "wannier", ["x", "w0", "w1"], rows, args.format)
    write_manifest(out / "wannier_manifest.json", "wannier", cfg, [path],
                   extra={"norm_w0": basis.norm_w0,
                          "overlap_w0_w1": basis.overlap_w0_w1,
                          "hopping_integral": basis.hopping_integral})
    print(f"wrote {path}")
    return 0


def cmd_overlaps(cfg: dict, args) -> int:
    lat = cfg.get("lattice", {})
    v0_list = cfg.get("v0_list_er", [lat.get("v0_er")])
    if v0_list == [None]:
        raise ConfigError("overlaps needs lattice.v0_er or v0_list_er")
    x0_list = cfg.get("x0_list", None)
    trap_cfg = _build_trap(cfg)
    header = ["v0_er", "x0_over_a", "phi", "phi_prime", "phi_prime_over_phi",
              "varphi", "varphi_prime", "x00_I", "x00_II", "y00", "z_n0",
              "w0_sq_center"]
    rows = []
    for v0 in v0_list:
        lat_one = dict(lat)
        lat_one["v0_er"] = v0
        basis = _build_basis({"lattice": lat_one})
        widths = x0_list if x0_list else [trap_cfg.x0_lattice]
        for x0 in widths:
            trap = ProbeTrap(nu=trap_cfg.nu, nu0=1.0 / (trap_cfg.m * float(x0) ** 2),
                             m=trap_cfg.m, g=trap_cfg.g, nz=trap_cfg.nz,
                             placement=trap_cfg.placement)
            ov = overlap_integrals(basis, trap)
            rows.append((float(v0), ov.x0 / basis.a, ov.phi, ov.phi_prime,
                         ov.locality_ratio, ov.varphi, ov.varphi_prime,
                         ov.x00_i, ov.x00_ii, ov.y00, ov.z_n0, ov.w0_sq_center))
    out = Path(args.out)
    path = write_table(out / "overlaps", header, rows, args.format)
    write_manifest(out / "overlaps_manifest.json", "overlaps", cfg, [path])
    print(f"wrote {path} ({len(rows)} rows)")
    return 0


SWEEP_HEADER = ["gap", "gammaI_clean", "gammaII_clean", "gammaI_noisy",
                "gammaII_noisy"]


def _assemble_system(cfg: dict):
    hubbard, trap, thermal = _validated_system(cfg)
    basis = _build_basis(cfg)
    overlaps = overlap_integrals(basis, trap)
    return ProbeSystem(hubbard=hubbard, trap=trap, thermal=thermal,
                       spectrum=build_spectrum(hubbard),
                       pre=prefactors(trap, overlaps))


def cmd_sweep(cfg: dict, args) -> int:
    system = _assemble_system(cfg)
    plan = _build_plan(cfg, system.spectrum, args)
    result = run_sweep(plan, system, threads=args.threads)
    rows = zip(result.gaps, result.gamma_i_clean, result.gamma_ii_clean,
               result.gamma_i_noisy, result.gamma_ii_noisy)
    out = Path(args.out)
    path = write_table(out / "sweep", SWEEP_HEADER, rows, args.format)
    resolved = dict(cfg)
    resolved.setdefault("sweep", {})
    resolved["sweep"] = {**resolved["sweep"], "noise": plan.noise_level,
                         "seed": plan.seed, "t_final": plan.t_final,
                         "samples_per_point": plan.samples_per_point}
    write_manifest(out / "sweep_manifest.json", "sweep", resolved, [path],
                   extra={"seed": plan.seed, "points": len(result.gaps),
                          "clamped": result.clamped,
                          "version": __version__})
    print(f"wrote {path} ({len(result.gaps)} points)")
    return 0


RECON_HEADER = ["ka", "omega", "beta_sq", "omega_analytic", "beta_sq_analytic",
                "rel_err_omega"]


def cmd_reconstruct(cfg: dict, args) -> int:
    system = _assemble_system(cfg)
    plan = _build_plan(cfg, system.spectrum, args)
    sweep_input = cfg.get("io", {}).get("sweep_input")
    if sweep_input:
        cols = read_csv_columns(sweep_input, SWEEP_HEADER)
        result = SweepResult(
            gaps=np.array(cols["gap"]),
            gamma_i_clean=np.array(cols["gammaI_clean"]),
            gamma_ii_clean=np.array(cols["gammaII_clean"]),
            gamma_i_noisy=np.array(cols["gammaI_noisy"]),
            gamma_ii_noisy=np.array(cols["gammaII_noisy"]),
            plan=plan)
    else:
        result = run_sweep(plan, system, threads=args.threads)
    analysis = cfg.get("analysis", {})
    rd, metrics = analyze_sweep(
        result, system.pre, system.thermal, spectrum=system.spectrum,
        ratio_mode=analysis.get("ratio_mode", "overlap"),
        rel_floor_site=float(analysis.get("rel_floor_site", 0.075)),
        rel_floor_bond=float(analysis.get("rel_floor_bond", 0.0)),
        occupation_floor=float(analysis.get("occupation_floor", 1e-6)))
    rows = []
    for point, match in zip(rd.points, metrics.matches):
        rel = (match.omega_hat - match.omega_true) / match.omega_true
        rows.append((point.ka, point.omega, point.beta_sq,
                     match.omega_true, match.beta_sq_true, rel))
    out = Path(args.out)
    path = write_table(out / "reconstruction", RECON_HEADER, rows, args.format)
    write_manifest(
        out / "reconstruct_manifest.json", "reconstruct", cfg, [path],
        extra={"seed": plan.seed,
               "metrics": {"rms_rel_omega": metrics.rms_rel_omega,
                           "rms_rel_beta": metrics.rms_rel_beta,
                           "coverage": metrics.coverage,
                           "n_recovered": metrics.n_recovered,
                           "n_modes": metrics.n_modes},
               "ratio_mode": rd.ratio_mode,
               "coupling_ratio": rd.coupling_ratio,
               "dropped": len(rd.dropped_peaks),
               "version": __version__})
    print(f"wrote {path}: coverage {metrics.n_recovered}/{metrics.n_modes}, "
          f"rms_rel_omega {metrics.rms_rel_omega:.3e}")
    return 0


COMMANDS = {
    "spectrum": cmd_spectrum,
    "wannier": cmd_wannier,
    "overlaps": cmd_overlaps,
    "sweep": cmd_sweep,
    "reconstruct": cmd_reconstruct,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latticeprobe",
        description="Impurity-probe spectroscopy of a 1D lattice superfluid")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config (or manifest)")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--noise", type=float, default=None)
        p.add_argument("--threads", type=int, default=1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except (OSError, ValueError) as err:
        print(f"error: cannot read config {args.config}: {err}", file=sys.stderr)
        return 2
    io_cfg = cfg.get("io", {})
    if args.out is None:
        args.out = io_cfg.get("out_dir", "out")
    args.out = _env_override("out", args.out)
    if args.format is None:
        args.format = io_cfg.get("format", "csv")
    args.format = _env_override("format", args.format)
    args.threads = _env_override("threads", args.threads)
    try:
        return COMMANDS[args.command](cfg, args)
    except ConvergenceError as err:
        print(f"error (numerical): {err}", file=sys.stderr)
        return 3
    except (ValidationError, KeyError) as err:
        print(f"error (config/validation): {err!r}", file=sys.stderr)
        return 2
    except LatticeProbeError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
