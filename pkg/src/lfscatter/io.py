"""Flat-file input/output: spectra, peak tables, comparison summaries.

Spectrum files are comma-separated with a ``#``-prefixed manifest header
(one ``# key = value`` line per parameter) so every run is reproducible from
its own output.  Numbers are printed with 17 significant digits, which
round-trips IEEE doubles exactly; nothing volatile (timestamps, thread
counts) is written, so identical runs produce byte-identical files.
"""

from __future__ import annotations

import math

import numpy as np

from .analysis import LineAssignments, PeakSet, SpectrumComparison
from .errors import ConfigError
from .field import Spectrum

SPECTRUM_COLUMNS = ("nu", "I_detection", "I_integrated")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _manifest_lines(manifest: dict) -> list[str]:
    return [f"# {key} = {_fmt(value)}" for key, value in manifest.items()]


def write_spectrum(path, spectrum: Spectrum, manifest: dict | None = None) -> None:
    manifest = dict(manifest) if manifest is not None else dict(spectrum.params)
    manifest.setdefault("detection_time", spectrum.detection_time)
    manifest.setdefault("t_end", spectrum.t_end)
    lines = _manifest_lines(manifest)
    lines.append(",".join(SPECTRUM_COLUMNS))
    for nu, det, tot in zip(spectrum.nu, spectrum.intensity_at_detection, spectrum.integrated):
        lines.append(f"{_fmt(float(nu))},{_fmt(float(det))},{_fmt(float(tot))}")
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")


def _parse_manifest_value(text: str):
    if text in ("true", "false"):
        return text == "true"
    try:
        as_float = float(text)
    except ValueError:
        return text
    if as_float.is_integer() and "." not in text and "e" not in text.lower() \
            and not math.isinf(as_float):
        return int(as_float)
    return as_float


def read_spectrum(path) -> Spectrum:
    manifest: dict = {}
    rows = []
    header = None
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, value = (part.strip() for part in body.split("=", 1))
                    manifest[key] = _parse_manifest_value(value)
                continue
            if header is None:
                header = tuple(line.split(","))
                if header != SPECTRUM_COLUMNS:
                    raise ConfigError(
                        f"{path}: line {line_no}: expected columns {SPECTRUM_COLUMNS}, got {header}")
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ConfigError(f"{path}: line {line_no}: expected 3 columns")
            rows.append([float(p) for p in parts])
    if header is None or not rows:
        raise ConfigError(f"{path}: no spectrum rows found")
    data = np.array(rows)
    return Spectrum(nu=data[:, 0], intensity_at_detection=data[:, 1], integrated=data[:, 2],
                    detection_time=float(manifest.get("detection_time", math.nan)),
                    t_end=float(manifest.get("t_end", math.nan)),
                    params=manifest)


def write_peaks(path, peaks: PeakSet, assignments: LineAssignments | None,
                manifest: dict | None = None) -> None:
    lines = _manifest_lines(manifest or {})
    lines.append(f"# threshold = {_fmt(peaks.threshold_used)}")
    lines.append("nu_center,height,fwhm,assigned_multiple,relative_height")
    by_center = {}
    if assignments is not None:
        by_center = {assignments.centers[j]: (j, assignments.ratios[j])
                     for j in assignments.ratios}
    for peak in peaks.peaks:
        j, rel = by_center.get(peak.nu_center, ("", ""))
        lines.append(f"{_fmt(peak.nu_center)},{_fmt(peak.height)},{_fmt(peak.fwhm)},"
                     f"{j},{_fmt(rel) if rel != '' else ''}")
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")


def write_comparison(path, detection: SpectrumComparison, integrated: SpectrumComparison,
                     manifest: dict | None = None) -> None:
    lines = _manifest_lines(manifest or {})
    lines.append("column,max_rel_peak_diff,l2_rel")
    lines.append(f"I_detection,{_fmt(detection.max_rel_peak_diff)},{_fmt(detection.l2_rel)}")
    lines.append(f"I_integrated,{_fmt(integrated.max_rel_peak_diff)},{_fmt(integrated.l2_rel)}")
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")
