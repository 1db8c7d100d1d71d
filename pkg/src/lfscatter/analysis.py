"""Quantitative features of spectra: peaks, widths, line assignments.

Peak centers are refined by three-point parabolic interpolation and widths
by linear interpolation of the half-height crossings, since the interesting
effects (sideband shifts toward the center as the density grows) are smaller
than the mode spacing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError, ParameterError
from .field import Spectrum

DEFAULT_THRESHOLD = 0.02


@dataclass(frozen=True)
class Peak:
    nu_center: float
    height: float
    fwhm: float


@dataclass(frozen=True)
class PeakSet:
    """Peaks above ``threshold_used`` (relative to the global maximum)."""

    peaks: tuple[Peak, ...]
    threshold_used: float

    def __len__(self) -> int:
        return len(self.peaks)

    def centers(self) -> np.ndarray:
        return np.array([p.nu_center for p in self.peaks])

    def heights(self) -> np.ndarray:
        return np.array([p.height for p in self.peaks])

    def nearest(self, nu: float) -> Peak:
        if not self.peaks:
            raise ParameterError("no peaks to search")
        return min(self.peaks, key=lambda p: abs(p.nu_center - nu))


def _half_crossing(nu, y, i, half, step):
    """Walk from sample i in direction ``step`` to the half-height crossing."""
    k = i
    while 0 <= k + step < len(y) and y[k + step] >= half:
        k += step
    if not 0 <= k + step < len(y):
        return float(nu[k])  # no crossing before the edge
    a, b = (k, k + step) if step > 0 else (k + step, k)
    frac = (half - y[a]) / (y[b] - y[a]) if y[b] != y[a] else 0.5
    return float(nu[a] + frac * (nu[b] - nu[a]))


def find_peaks_xy(nu: np.ndarray, intensity: np.ndarray,
                  rel_threshold: float = DEFAULT_THRESHOLD) -> PeakSet:
    """Local maxima above rel_threshold * max, with refined centers and FWHM."""
    nu = np.asarray(nu, dtype=float)
    y = np.asarray(intensity, dtype=float)
    if nu.shape != y.shape or nu.ndim != 1 or nu.size < 3:
        raise ParameterError("need matching 1-d arrays with at least 3 points")
    if not 0.0 < rel_threshold < 1.0:
        raise ParameterError(f"rel_threshold must be in (0, 1), got {rel_threshold}")
    top = float(np.max(y))
    if top <= 0.0:
        return PeakSet(peaks=(), threshold_used=rel_threshold)
    threshold = rel_threshold * top

    peaks = []
    for i in range(1, len(y) - 1):
        if not (y[i] >= y[i - 1] and y[i] > y[i + 1] and y[i] >= threshold):
            continue
        ym, y0, yp = y[i - 1], y[i], y[i + 1]
        den = ym - 2.0 * y0 + yp
        shift = 0.0 if den == 0 else 0.5 * (ym - yp) / den
        shift = min(max(shift, -1.0), 1.0)
        spacing = 0.5 * (nu[i + 1] - nu[i - 1])
        center = float(nu[i] + shift * spacing)
        height = float(y0 - 0.25 * (ym - yp) * shift)
        half = 0.5 * height
        left = _half_crossing(nu, y, i, half, -1)
        right = _half_crossing(nu, y, i, half, +1)
        fwhm = max(right - left, 1e-300)
        peaks.append(Peak(nu_center=center, height=height, fwhm=fwhm))
    return PeakSet(peaks=tuple(peaks), threshold_used=rel_threshold)


def find_peaks(spectrum: Spectrum, rel_threshold: float = DEFAULT_THRESHOLD,
               use_integrated: bool = False) -> PeakSet:
    column = spectrum.integrated if use_integrated else spectrum.intensity_at_detection
    return find_peaks_xy(spectrum.nu, column, rel_threshold)


@dataclass(frozen=True)
class LineAssignments:
    """Peaks mapped to integer multiples of the Rabi splitting 2R.

    ``ratios[j]`` is the assigned peak height normalized to the tallest
    assigned peak.  Peaks losing a contest for an already-taken multiple are
    reported in ``unassigned`` (shifted structures at large density).
    """

    ratios: dict[int, float]
    centers: dict[int, float]
    unassigned: tuple[Peak, ...]

    def sideband_count(self) -> int:
        return sum(1 for j in self.ratios if j != 0)


def line_ratios(peaks: PeakSet, rabi: float) -> LineAssignments:
    """Assign peaks to the nearest multiple of 2R within half a spacing."""
    if rabi <= 0:
        raise ParameterError(f"rabi must be > 0, got {rabi}")
    if not peaks.peaks:
        raise ParameterError("line_ratios needs a nonempty PeakSet")
    spacing = 2.0 * rabi
    best: dict[int, Peak] = {}
    unassigned = []
    for peak in peaks.peaks:
        j = round(peak.nu_center / spacing)
        if abs(peak.nu_center - j * spacing) > 0.5 * spacing:
            unassigned.append(peak)
            continue
        if j in best and best[j].height >= peak.height:
            unassigned.append(peak)
        else:
            if j in best:
                unassigned.append(best[j])
            best[j] = peak
    top = max(p.height for p in best.values()) if best else math.nan
    ratios = {j: p.height / top for j, p in sorted(best.items())}
    centers = {j: p.nu_center for j, p in sorted(best.items())}
    return LineAssignments(ratios=ratios, centers=centers, unassigned=tuple(unassigned))


@dataclass(frozen=True)
class SpectrumComparison:
    max_rel_peak_diff: float
    l2_rel: float


def _directed_peak_diff(nu, y_ref, y_other, peaks_ref, peaks_other):
    worst = 0.0
    for p in peaks_ref.peaks:
        height_other = None
        if peaks_other.peaks:
            q = peaks_other.nearest(p.nu_center)
            if abs(q.nu_center - p.nu_center) <= 0.5 * p.fwhm:
                height_other = q.height
        if height_other is None:
            height_other = float(np.interp(p.nu_center, nu, y_other))
        low = min(p.height, height_other)
        if low <= 0.0:
            worst = math.inf if p.height != height_other else worst
            continue
        worst = max(worst, abs(height_other - p.height) / low)
    return worst


def compare_spectra(a: Spectrum, b: Spectrum, rel_threshold: float = DEFAULT_THRESHOLD,
                    use_integrated: bool = False) -> SpectrumComparison:
    """Symmetric peak-height and L2 metrics between spectra on one grid.

    Peaks of each spectrum are matched to the nearest peak of the other
    (within half their own FWHM, else the other's same-position value) and
    height differences are normalized by the smaller of the pair, so
    swapping the arguments cannot change the result.  Both metrics are zero
    exactly when the compared columns are identical.
    """
    if a.nu.shape != b.nu.shape or not np.array_equal(a.nu, b.nu):
        raise GridMismatchError("spectra live on different mode grids")
    ya = a.integrated if use_integrated else a.intensity_at_detection
    yb = b.integrated if use_integrated else b.intensity_at_detection

    peaks_a = find_peaks_xy(a.nu, ya, rel_threshold)
    peaks_b = find_peaks_xy(b.nu, yb, rel_threshold)
    max_diff = max(_directed_peak_diff(a.nu, ya, yb, peaks_a, peaks_b),
                   _directed_peak_diff(b.nu, yb, ya, peaks_b, peaks_a))
    norm = min(float(np.linalg.norm(ya)), float(np.linalg.norm(yb)))
    l2 = float(np.linalg.norm(ya - yb)) / norm if norm > 0 else \
        (0.0 if np.array_equal(ya, yb) else math.inf)
    return SpectrumComparison(max_rel_peak_diff=max_diff, l2_rel=l2)
