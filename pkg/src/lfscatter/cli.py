"""Command-line interface.

Subcommands: ``simulate`` (full nonlinear pipeline), ``analytic`` (the
perturbative spectrum), ``compare`` (metrics between two result files),
``peaks`` (peak table of a result file) and ``presets``.  Results are CSV
tables with a manifest header plus a rendered PNG figure next to each table.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, analytic, bloch, field
from .config import (PRESETS, ScenarioConfig, load_config, preset_config,
                     with_output)
from .errors import AccuracyError, LfscatterError, NumericalError, ParameterError
from .io import read_spectrum, write_comparison, write_peaks, write_spectrum

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lfscatter",
        description="Transient stimulated-scattering spectra of a short pulse "
                    "in a dense two-level medium.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_scenario_flags(p):
        p.add_argument("--config", metavar="PATH", help="config file (key = value sections)")
        p.add_argument("--preset", metavar="NAME", choices=sorted(PRESETS),
                       help="start from a named figure preset")
        p.add_argument("--out", metavar="DIR", help="output directory (overrides config)")
        p.add_argument("--no-plot", action="store_true", help="skip the PNG figure")

    p_sim = sub.add_parser("simulate", help="run the full nonlinear simulation")
    add_scenario_flags(p_sim)
    p_sim.add_argument("--threads", type=int, default=os.cpu_count(),
                       help="worker threads for the mode sweep (default: all cores)")

    p_ana = sub.add_parser("analytic", help="evaluate the perturbative spectrum")
    add_scenario_flags(p_ana)
    p_ana.add_argument("--mode", choices=analytic.SPECTRUM_MODES, default="exact",
                       help="resonance-factor variant (default: exact)")

    p_cmp = sub.add_parser("compare", help="compare two result files on one grid")
    p_cmp.add_argument("file_a")
    p_cmp.add_argument("file_b")
    p_cmp.add_argument("--out", metavar="DIR", help="output directory (default: cwd)")
    p_cmp.add_argument("--threshold", type=float, default=analysis.DEFAULT_THRESHOLD)
    p_cmp.add_argument("--no-plot", action="store_true")

    p_pk = sub.add_parser("peaks", help="extract peaks from a result file")
    p_pk.add_argument("file")
    p_pk.add_argument("--out", metavar="DIR", help="output directory (default: cwd)")
    p_pk.add_argument("--threshold", type=float, default=analysis.DEFAULT_THRESHOLD)
    p_pk.add_argument("--column", choices=("detection", "integrated"), default="detection")
    p_pk.add_argument("--no-plot", action="store_true")

    sub.add_parser("presets", help="list the available figure presets")
    return parser


def _resolve_scenario(args) -> ScenarioConfig:
    if args.config:
        config = load_config(args.config)
    elif args.preset:
        config = preset_config(args.preset)
    else:
        raise ParameterError("give --config PATH and/or --preset NAME")
    if args.config and args.preset:
        # --preset is the base; an explicit config file wins key by key.
        text = Path(args.config).read_text(encoding="utf-8")
        from .config import parse_config
        config = parse_config(f"preset = {args.preset}\n" + text)
    overrides = {}
    if args.out:
        overrides["directory"] = args.out
    if args.no_plot:
        overrides["plot"] = False
    return with_output(config, **overrides) if overrides else config


def _output_paths(config: ScenarioConfig, suffix: str = "") -> tuple[Path, Path]:
    directory = Path(config.output.directory)
    directory.mkdir(parents=True, exist_ok=True)
    base = (config.output.basename or config.name) + suffix
    return directory / f"{base}.csv", directory / f"{base}.png"


def _normalize(spectrum: field.Spectrum, how: str) -> field.Spectrum:
    if how == "raw":
        return spectrum
    det = spectrum.intensity_at_detection
    tot = spectrum.integrated
    det_max = float(np.max(det))
    tot_max = float(np.max(tot[np.isfinite(tot)])) if np.any(np.isfinite(tot)) else 0.0
    return field.Spectrum(
        nu=spectrum.nu,
        intensity_at_detection=det / det_max if det_max > 0 else det,
        integrated=tot / tot_max if tot_max > 0 else tot,
        detection_time=spectrum.detection_time, t_end=spectrum.t_end,
        params=spectrum.params)


def run_simulate(config: ScenarioConfig, threads: int | None = None) -> Path:
    """Full pipeline: atom integration, mode sweep, CSV + figure."""
    traj = bloch.integrate_atom(config.pulse, config.medium, dt=config.numerics.dt)
    spectrum = field.spectrum_sweep(traj, config.grid.to_mode_grid(),
                                    detection_time=config.resolved_detection_time(),
                                    t_end=config.resolved_t_end(), threads=threads)
    spectrum = _normalize(spectrum, config.output.normalization)
    manifest = config.manifest()
    manifest["kind"] = "simulation"
    csv_path, png_path = _output_paths(config)
    write_spectrum(csv_path, spectrum, manifest)
    if config.output.plot:
        from .plotting import save_spectrum_figure
        save_spectrum_figure(png_path, spectrum, title=config.name)
    return csv_path


def run_analytic(config: ScenarioConfig, mode: str = "exact") -> Path:
    spectrum = analytic.perturbative_spectrum(
        config.grid.to_mode_grid(), config.feedback_strength, config.pulse.rabi,
        config.pulse.duration, mode=mode, max_order=config.numerics.truncation_order)
    spectrum = _normalize(spectrum, config.output.normalization)
    manifest = config.manifest()
    manifest["kind"] = "analytic"
    manifest["analytic.mode"] = mode
    csv_path, png_path = _output_paths(config, suffix="-analytic")
    write_spectrum(csv_path, spectrum, manifest)
    if config.output.plot:
        from .plotting import save_spectrum_figure
        save_spectrum_figure(png_path, spectrum, title=f"{config.name} (perturbative)")
    return csv_path


def run_compare(file_a, file_b, out_dir=None, threshold=analysis.DEFAULT_THRESHOLD,
                plot: bool = True) -> Path:
    spec_a = read_spectrum(file_a)
    spec_b = read_spectrum(file_b)
    det = analysis.compare_spectra(spec_a, spec_b, rel_threshold=threshold)
    tot = analysis.compare_spectra(spec_a, spec_b, rel_threshold=threshold,
                                   use_integrated=True)
    directory = Path(out_dir or ".")
    directory.mkdir(parents=True, exist_ok=True)
    stem = f"compare-{Path(file_a).stem}-vs-{Path(file_b).stem}"
    path = directory / f"{stem}.csv"
    write_comparison(path, det, tot, manifest={"file_a": str(file_a), "file_b": str(file_b)})
    if plot:
        from .plotting import save_comparison_figure
        save_comparison_figure(directory / f"{stem}.png", spec_a, spec_b,
                               labels=(Path(file_a).stem, Path(file_b).stem))
    print(f"I_detection:  max_rel_peak_diff={det.max_rel_peak_diff:.6g}  "
          f"l2_rel={det.l2_rel:.6g}")
    print(f"I_integrated: max_rel_peak_diff={tot.max_rel_peak_diff:.6g}  "
          f"l2_rel={tot.l2_rel:.6g}")
    return path


def run_peaks(file, out_dir=None, threshold=analysis.DEFAULT_THRESHOLD,
              column: str = "detection", plot: bool = True) -> Path:
    spectrum = read_spectrum(file)
    peaks = analysis.find_peaks(spectrum, rel_threshold=threshold,
                                use_integrated=(column == "integrated"))
    rabi = spectrum.params.get("pulse.rabi", spectrum.params.get("rabi"))
    assignments = None
    if peaks.peaks and rabi:
        assignments = analysis.line_ratios(peaks, float(rabi))
    directory = Path(out_dir or ".")
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"peaks-{Path(file).stem}.csv"
    write_peaks(path, peaks, assignments,
                manifest={"source": str(file), "column": column})
    if plot:
        from .plotting import save_spectrum_figure
        save_spectrum_figure(directory / f"peaks-{Path(file).stem}.png", spectrum,
                             title=f"peaks of {Path(file).stem}", peaks=peaks)
    for peak in peaks.peaks:
        print(f"nu={peak.nu_center:.6g}  height={peak.height:.6g}  fwhm={peak.fwhm:.6g}")
    if assignments is not None:
        labels = ", ".join(f"{j}: {r:.3g}" for j, r in assignments.ratios.items())
        print(f"assigned multiples of 2R: {{{labels}}}")
    return path


def _print_presets() -> None:
    print(f"{'name':8} {'B':>5} {'eta':>5} {'T':>5} {'gamma':>6} {'gamma2':>6} {'area/2pi':>8}")
    for name, cfg in PRESETS.items():
        print(f"{name:8} {cfg.feedback_strength:5.2f} {cfg.grid.eta:5.2f} "
              f"{cfg.pulse.duration:5.2f} {cfg.medium.gamma:6.2f} "
              f"{cfg.medium.gamma2:6.2f} {cfg.pulse.area / (2 * np.pi):8.1f}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "presets":
            _print_presets()
        elif args.command == "simulate":
            config = _resolve_scenario(args)
            path = run_simulate(config, threads=args.threads)
            print(f"wrote {path}")
        elif args.command == "analytic":
            config = _resolve_scenario(args)
            path = run_analytic(config, mode=args.mode)
            print(f"wrote {path}")
        elif args.command == "compare":
            run_compare(args.file_a, args.file_b, out_dir=args.out,
                        threshold=args.threshold, plot=not args.no_plot)
        elif args.command == "peaks":
            run_peaks(args.file, out_dir=args.out, threshold=args.threshold,
                      column=args.column, plot=not args.no_plot)
    except (AccuracyError, NumericalError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ParameterError, LfscatterError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
