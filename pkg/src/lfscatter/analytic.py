"""Perturbative (first order in B) spectrum of the scattered light.

During the pulse the coherence is sin(V(u))/2 with u = 2R*tau and
V(u) = u - B(1 - cos u).  Expanding sin(V) in harmonics e^{iju} via the
Bessel product expansion gives coefficients Y_j; a detector mode at detuning
nu then weighs each harmonic with a finite-pulse resonance factor S(j).  The
spectrum is the cross-term-free sum of |S(j)|^2 |Y_j|^2.

``harmonic_coefficients`` returns the true Fourier coefficients of sin(V);
the closed form used here is

    Y_j = ((-i)^j e^{iB} J_{j+1}(B) - i^j e^{-iB} J_{j-1}(B)) / 2

which the test suite certifies against direct quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import jv

from .bloch import _require_finite
from .errors import AccuracyError, ParameterError
from .field import ModeGrid, Spectrum

#: Squared-magnitude budget for the first truncated harmonic.
TAIL_TOL = 1e-10

SPECTRUM_MODES = ("exact", "long_pulse", "short_pulse")


def default_truncation(b: float) -> int:
    """Truncation order with super-geometric tail headroom: max(8, ceil(2+3eB))."""
    return max(8, math.ceil(2.0 + 3.0 * math.e * b))


def minimum_truncation(b: float) -> int:
    return math.ceil(2.0 + 3.0 * b)


@dataclass(frozen=True)
class HarmonicCoefficients:
    """Fourier coefficients Y_j of sin(V(u)) for j in [-max_order, max_order]."""

    b: float
    max_order: int
    values: np.ndarray

    def coefficient(self, j: int) -> complex:
        if abs(j) > self.max_order:
            raise ParameterError(f"order {j} outside truncation [{-self.max_order}, {self.max_order}]")
        return complex(self.values[j + self.max_order])

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.max_order, self.max_order + 1)

    def abs_squared(self, j: int) -> float:
        return abs(self.coefficient(j)) ** 2

    def power_sum(self) -> float:
        """Sum of |Y_j|^2; Parseval ties it to the mean of sin^2(V)."""
        return float(np.sum(np.abs(self.values) ** 2))


def harmonic_coefficients(b: float, max_order: int | None = None) -> HarmonicCoefficients:
    """Closed-form Y_j from the Bessel product expansion, with a tail audit.

    Raises AccuracyError when the first dropped |Y|^2 exceeds TAIL_TOL, i.e.
    when ``max_order`` is too small for the requested b.
    """
    _require_finite(b=b)
    if b < 0:
        raise ParameterError(f"b must be >= 0, got {b}")
    if max_order is None:
        max_order = default_truncation(b)
    if max_order < minimum_truncation(b):
        raise ParameterError(
            f"max_order={max_order} below the minimum {minimum_truncation(b)} for b={b}")

    j = np.arange(-max_order, max_order + 1)
    i_pow = np.array([1, 1j, -1, -1j], dtype=complex)[np.mod(j, 4)]
    values = 0.5 * (np.conj(i_pow) * np.exp(1j * b) * jv(j + 1, b)
                    - i_pow * np.exp(-1j * b) * jv(j - 1, b))

    # |Y_{J+1}| <= (J_J + J_{J+2})/2; audit its squared contribution.
    tail = (0.5 * (abs(jv(max_order, b)) + abs(jv(max_order + 2, b)))) ** 2
    if tail > TAIL_TOL:
        raise AccuracyError(
            f"truncation at max_order={max_order} leaves a tail of ~{tail:.2e} > {TAIL_TOL:.0e}; "
            f"use max_order >= {default_truncation(b)}")
    return HarmonicCoefficients(b=b, max_order=max_order, values=values)


@dataclass(frozen=True)
class ResonanceFactor:
    """Finite-pulse resonance factor in the dimensionless detuning variable."""

    value: complex
    abs_squared: float


def resonance_factor(m: int, nu: float, eta: float, rabi: float,
                     duration: float) -> ResonanceFactor:
    """S(m) = (e^{i(eps+m)U} - 1)/(i(eps+m)) with eps = (nu - i eta/2)/(2R).

    U = 2R*duration is the pulse area.  Near the resonance eps + m -> 0 the
    quotient switches to its power series, so the eta -> 0 limit at
    nu = -2mR returns exactly U.  The dimensional squared modulus used in the
    spectrum is e^{-eta*duration} |S|^2 / (2R)^2; see
    ``resonance_weight_printed``.
    """
    _require_finite(nu=nu, eta=eta, rabi=rabi, duration=duration)
    if rabi <= 0 or duration <= 0 or eta < 0:
        raise ParameterError("resonance_factor requires rabi > 0, duration > 0, eta >= 0")
    eps = (nu - 0.5j * eta) / (2.0 * rabi)
    w = 1j * (eps + m)
    area = 2.0 * rabi * duration
    if abs(eps + m) < 1e-8:
        wu = w * area
        s = area * (1.0 + wu / 2.0 + wu**2 / 6.0 + wu**3 / 24.0)
    else:
        s = (np.exp(w * area) - 1.0) / w
    s = complex(s)
    return ResonanceFactor(value=s, abs_squared=abs(s) ** 2)


def resonance_weight_printed(m: int, nu, eta: float, rabi: float, duration: float):
    """|S(m)|^2 in dimensional form, evaluated at the end of the pulse.

    Equals e^{-eta T} |S(m)|^2 / (2R)^2 with S from ``resonance_factor``:

        (1 + e^{-eta T} - 2 e^{-eta T/2} cos((nu + 2mR)T)) / ((nu + 2mR)^2 + eta^2/4)

    Accepts a scalar or array ``nu``.  At eta = 0 the on-resonance value is
    the removable limit duration^2.
    """
    nu_arr = np.asarray(nu, dtype=float)
    delta = nu_arr + 2.0 * m * rabi
    x = eta * duration
    num = 1.0 + math.exp(-x) - 2.0 * math.exp(-0.5 * x) * np.cos(delta * duration)
    den = delta**2 + 0.25 * eta**2
    singular = den == 0.0
    out = np.where(singular, duration**2, num / np.where(singular, 1.0, den))
    return out if out.ndim else float(out)


def _resonance_weights(mode: str, orders: np.ndarray, nu: np.ndarray,
                       eta: np.ndarray, rabi: float, duration: float) -> np.ndarray:
    """(n_orders, n_modes) array of per-harmonic detector weights."""
    delta = nu[None, :] + 2.0 * rabi * orders[:, None]
    den = delta**2 + 0.25 * eta[None, :] ** 2
    if mode == "long_pulse":
        return 1.0 / den
    phase = np.cos(delta * duration)
    if mode == "short_pulse":
        return 2.0 * (1.0 - phase) / den
    x = eta[None, :] * duration
    return (1.0 + np.exp(-x) - 2.0 * np.exp(-0.5 * x) * phase) / den


def perturbative_spectrum(grid: ModeGrid, b: float, rabi: float, duration: float,
                          t1: float = 0.0, mode: str = "exact",
                          max_order: int | None = None) -> Spectrum:
    """First-order spectrum I(nu) = scale * e^{-eta t1} * sum_j |S(j)|^2 |Y_j|^2.

    ``mode`` selects the exact finite-pulse factor, its long-pulse Lorentzian
    limit, or the short-pulse modulated form.  The prefactor eta*kappa^2/4
    makes the result directly comparable to the full simulation at the same
    grid; the residual-polarization (Rayleigh) contribution is deliberately
    absent.  ``t1`` is detection delay past the end of the pulse.

    The integrated column uses the plateau-then-ringdown model
    I^T = I * (duration + 1/eta).
    """
    if mode not in SPECTRUM_MODES:
        raise ParameterError(f"mode must be one of {SPECTRUM_MODES}, got {mode!r}")
    _require_finite(t1=t1)
    if t1 < 0:
        raise ParameterError(f"t1 must be >= 0, got {t1}")
    coeffs = harmonic_coefficients(b, max_order)
    weights = _resonance_weights(mode, coeffs.orders, grid.nu, grid.eta, rabi, duration)
    power = np.abs(coeffs.values) ** 2
    intensity = (grid.intensity_scale * grid.eta * grid.coupling**2 / 4.0
                 * np.exp(-grid.eta * t1) * (power[:, None] * weights).sum(axis=0))
    integrated = intensity * (duration + 1.0 / grid.eta)
    params = {
        "kind": "analytic", "mode": mode, "b": b, "rabi": rabi, "duration": duration,
        "t1": t1, "truncation_order": coeffs.max_order,
        "kappa": grid.coupling, "intensity_scale": grid.intensity_scale,
    }
    return Spectrum(nu=grid.nu.copy(), intensity_at_detection=intensity,
                    integrated=integrated, detection_time=duration + t1,
                    t_end=duration + t1, params=params)


@dataclass(frozen=True)
class LineIntensityTable:
    """Sideband weights |Y_j|^2 normalized to the first sideband |Y_1|^2."""

    b_values: np.ndarray
    orders: tuple[int, ...]
    ratios: np.ndarray  # shape (len(b_values), len(orders))


def line_intensity_curve(b_values, orders=(1, 2, 3)) -> LineIntensityTable:
    """Relative line intensities as a function of b, as in the sideband plot."""
    b_values = np.asarray(b_values, dtype=float)
    if np.any(b_values < 0) or np.any(b_values > 1.0):
        raise ParameterError("line_intensity_curve expects 0 <= b <= 1 (perturbative regime)")
    ratios = np.empty((b_values.size, len(orders)))
    for i, b in enumerate(b_values):
        coeffs = harmonic_coefficients(float(b))
        ref = coeffs.abs_squared(1)
        ratios[i] = [coeffs.abs_squared(j) / ref if ref > 0 else math.nan for j in orders]
    return LineIntensityTable(b_values=b_values, orders=tuple(orders), ratios=ratios)
