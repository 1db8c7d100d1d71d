"""Figure rendering for the report path (Agg backend, files only)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .analysis import PeakSet  # noqa: E402
from .field import Spectrum  # noqa: E402


def save_spectrum_figure(path, spectrum: Spectrum, title: str | None = None,
                         peaks: PeakSet | None = None) -> None:
    """Two-panel figure: detection-time and time-integrated intensity vs nu."""
    fig, (ax_det, ax_int) = plt.subplots(2, 1, sharex=True, figsize=(8, 6))
    ax_det.plot(spectrum.nu, spectrum.intensity_at_detection, lw=0.9, color="C0")
    ax_det.set_ylabel(r"$I(\nu)$ at detection")
    ax_int.plot(spectrum.nu, spectrum.integrated, lw=0.9, color="C1")
    ax_int.set_ylabel(r"$I^T(\nu)$ integrated")
    ax_int.set_xlabel(r"mode detuning $\nu$")
    if peaks is not None and peaks.peaks:
        ax_det.plot(peaks.centers(), peaks.heights(), "v", color="k", ms=5, alpha=0.7)
    if title:
        ax_det.set_title(title)
    for ax in (ax_det, ax_int):
        ax.margins(x=0.01)
        ax.grid(True, alpha=0.25)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_comparison_figure(path, a: Spectrum, b: Spectrum,
                           labels=("a", "b"), title: str | None = None) -> None:
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(a.nu, a.intensity_at_detection, lw=0.9, label=labels[0])
    ax.plot(b.nu, b.intensity_at_detection, lw=0.9, ls="--", label=labels[1])
    ax.set_xlabel(r"mode detuning $\nu$")
    ax.set_ylabel(r"$I(\nu)$ at detection")
    ax.margins(x=0.01)
    ax.grid(True, alpha=0.25)
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
