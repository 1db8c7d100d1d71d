"""Detector-mode evolution driven by the recorded atomic coherence.

Each mode obeys the linear equation

    d beta/dt = -(i nu + eta/2) beta - kappa * sigma(t),    beta(0) = 0,

with sigma(t) taken from a PolarizationTrajectory.  The step update treats
sigma as piecewise linear between samples and integrates the rest exactly
(exponential time differencing), so stiff modes cost nothing extra.  After
the pulse sigma decays as a single exponential, which makes the remaining
evolution a two-exponential closed form; ``ringdown_extend`` evaluates it
and ``integrated_intensity`` integrates its tail analytically.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .bloch import MediumParams, PolarizationTrajectory, _require_finite
from .errors import ParameterError

#: Modes evolved per vectorized batch; fixed so results cannot depend on it.
SWEEP_CHUNK = 256

#: Pole separation (times the sampled span) below which the ring-down
#: switches to the coinciding-pole form; balances the truncation error of
#: that form against cancellation in the two-exponential one.
DEGENERATE_TOL = 1e-8


@dataclass(frozen=True)
class ModeGrid:
    """Detector modes: detunings ``nu`` (strictly increasing) and dampings ``eta``.

    ``coupling`` is the lumped forcing constant kappa (number density times
    matrix element, arbitrary units); ``intensity_scale`` collects the
    remaining dimensional prefactors of the intensity.
    """

    nu: np.ndarray
    eta: np.ndarray
    coupling: float = 1.0
    intensity_scale: float = 1.0

    def __post_init__(self):
        nu = np.asarray(self.nu, dtype=float)
        eta = np.broadcast_to(np.asarray(self.eta, dtype=float), nu.shape).copy()
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "eta", eta)
        if nu.ndim != 1 or nu.size == 0:
            raise ParameterError("nu must be a nonempty 1-d array")
        if not np.all(np.isfinite(nu)) or not np.all(np.isfinite(eta)):
            raise ParameterError("mode grid entries must be finite")
        if np.any(np.diff(nu) <= 0):
            raise ParameterError("nu values must be strictly increasing")
        if np.any(eta <= 0):
            raise ParameterError("eta must be > 0 for every mode")
        _require_finite(coupling=self.coupling, intensity_scale=self.intensity_scale)
        if self.coupling <= 0 or self.intensity_scale <= 0:
            raise ParameterError("coupling and intensity_scale must be > 0")

    @classmethod
    def linspace(cls, nu_min: float, nu_max: float, n_modes: int, eta: float,
                 coupling: float = 1.0, intensity_scale: float = 1.0) -> "ModeGrid":
        if n_modes < 3:
            raise ParameterError(f"n_modes must be >= 3, got {n_modes}")
        if not nu_min < nu_max:
            raise ParameterError("nu_min must be < nu_max")
        return cls(nu=np.linspace(nu_min, nu_max, n_modes), eta=np.full(n_modes, float(eta)),
                   coupling=coupling, intensity_scale=intensity_scale)

    def __len__(self) -> int:
        return int(self.nu.size)


@dataclass(frozen=True)
class RingdownTail:
    """Closed-form continuation beyond the last sample.

    For t >= t_end the amplitude is the free solution of
    d beta/dt = -lam beta - kappa sigma_end e^{-mu (t-t_end)} starting from
    beta_end; ``degenerate`` marks coinciding poles (lam == mu), where the
    particular solution turns into the (t-t_end) e^{-lam (t-t_end)} form.
    """

    t_end: float
    lam: complex
    mu: complex
    beta_end: complex
    sigma_end: complex
    kappa: float
    degenerate: bool


@dataclass(frozen=True)
class ModeAmplitudeSeries:
    """Coherent amplitude of one mode, sampled on the trajectory grid."""

    mode_index: int
    nu: float
    eta: float
    kappa: float
    t0: float
    dt: float
    beta: np.ndarray
    tail: RingdownTail | None = None

    def __post_init__(self):
        if self.eta <= 0:
            raise ParameterError(f"eta must be > 0, got {self.eta}")
        if len(self.beta) == 0:
            raise ParameterError("beta must contain at least one sample")
        if not np.all(np.isfinite(self.beta)):
            raise ParameterError("beta contains nonfinite samples")

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.beta))


@dataclass(frozen=True)
class Spectrum:
    """Per-mode intensity at the detection time plus the time-integrated one."""

    nu: np.ndarray
    intensity_at_detection: np.ndarray
    integrated: np.ndarray
    detection_time: float
    t_end: float
    params: dict

    def __post_init__(self):
        n = len(self.nu)
        if len(self.intensity_at_detection) != n or len(self.integrated) != n:
            raise ParameterError("intensity arrays must match the grid length")
        if np.any(self.intensity_at_detection < 0) or np.any(self.integrated < 0):
            raise ParameterError("intensities must be >= 0")


def _phi1(z: np.ndarray) -> np.ndarray:
    """(e^z - 1)/z, series below |z| = 0.25 to dodge cancellation."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 0.25
    out = np.empty_like(z)
    zs = np.where(small, z, 0.0)
    acc = np.zeros_like(z)
    term = np.ones_like(z)
    for k in range(1, 18):
        acc += term
        term = term * zs / (k + 1)
    out[small] = acc[small]
    zb = np.where(small, 1.0, z)
    out[~small] = ((np.exp(zb) - 1.0) / zb)[~small]
    return out


def _phi2(z: np.ndarray) -> np.ndarray:
    """(e^z - 1 - z)/z^2, series below |z| = 0.25."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 0.25
    out = np.empty_like(z)
    zs = np.where(small, z, 0.0)
    acc = np.zeros_like(z)
    term = np.full_like(z, 0.5)
    for k in range(1, 18):
        acc += term
        term = term * zs / (k + 2)
    out[small] = acc[small]
    zb = np.where(small, 1.0, z)
    out[~small] = ((np.exp(zb) - 1.0 - zb) / zb**2)[~small]
    return out


def _evolve_batch(sigma: np.ndarray, dt: float, lam: np.ndarray, kappa: float) -> np.ndarray:
    """Amplitudes for a batch of modes, shape (n_modes, n_samples).

    Per-step exact update for piecewise-linear forcing:
        beta_{n+1} = e^{-lam dt} beta_n - kappa dt [(phi1 - phi2) sigma_n + phi2 sigma_{n+1}]
    evaluated at z = -lam dt.  Elementwise in the modes, so batching cannot
    change any mode's result.
    """
    z = -lam * dt
    decay = np.exp(z)
    p2 = _phi2(z)
    w_old = -kappa * dt * (_phi1(z) - p2)
    w_new = -kappa * dt * p2
    beta = np.empty((lam.size, sigma.size), dtype=complex)
    beta[:, 0] = 0.0
    cur = np.zeros(lam.size, dtype=complex)
    for i in range(sigma.size - 1):
        cur = decay * cur + w_old * sigma[i] + w_new * sigma[i + 1]
        beta[:, i + 1] = cur
    return beta


def evolve_mode(traj: PolarizationTrajectory, nu: float, eta: float, kappa: float,
                mode_index: int = 0) -> ModeAmplitudeSeries:
    """Evolve one mode over the sampled trajectory from the vacuum."""
    _require_finite(nu=nu, eta=eta, kappa=kappa)
    if eta <= 0:
        raise ParameterError(f"eta must be > 0, got {eta}")
    lam = np.array([complex(0.5 * eta, nu)])
    beta = _evolve_batch(traj.samples, traj.dt, lam, kappa)[0]
    return ModeAmplitudeSeries(mode_index=mode_index, nu=nu, eta=eta, kappa=kappa,
                               t0=traj.t0, dt=traj.dt, beta=beta)


def ringdown_extend(series: ModeAmplitudeSeries, final, pulse_T: float,
                    medium: MediumParams, detuning: float, t_end: float) -> ModeAmplitudeSeries:
    """Continue the amplitude past the pulse using the closed form.

    After the pulse sigma(t) = sigma(T) e^{-mu (t-T)} with
    mu = i*detuning + gamma/2 + gamma2, so

        beta(t) = (beta(T) - P) e^{-lam (t-T)} + P e^{-mu (t-T)},
        P = kappa sigma(T) / (mu - lam),

    or the limiting (beta(T) - kappa sigma(T) (t-T)) e^{-lam (t-T)} when the
    poles coincide.  New samples keep the series spacing; the returned tail
    carries the continuation constants for exact integration beyond t_end.
    ``final`` is the atomic state at the end of the pulse.
    """
    _require_finite(pulse_T=pulse_T, t_end=t_end, detuning=detuning)
    if t_end < pulse_T:
        raise ParameterError("t_end must be >= pulse_T")
    t_last = series.t0 + series.dt * (len(series.beta) - 1)
    if abs(t_last - pulse_T) > 0.5 * series.dt:
        raise ParameterError(
            f"series ends at t={t_last:.6g}, expected the pulse edge {pulse_T:.6g}")
    sigma_end = complex(final.coherence)
    beta_end = complex(series.beta[-1])
    lam = complex(0.5 * series.eta, series.nu)
    mu = complex(medium.coherence_decay, detuning)

    n_ext = max(0, math.ceil((t_end - pulse_T) / series.dt - 1e-9))
    s_last = series.dt * n_ext
    span = max(s_last, 1.0 / lam.real)
    degenerate = abs(lam - mu) * span <= DEGENERATE_TOL

    s = series.dt * np.arange(1, n_ext + 1)
    sigma_last = sigma_end * np.exp(-mu * s_last)
    if degenerate:
        ext = (beta_end - series.kappa * sigma_end * s) * np.exp(-lam * s)
        beta_last = complex((beta_end - series.kappa * sigma_end * s_last)
                            * np.exp(-lam * s_last))
    else:
        part = series.kappa * sigma_end / (mu - lam)
        ext = (beta_end - part) * np.exp(-lam * s) + part * np.exp(-mu * s)
        beta_last = complex((beta_end - part) * np.exp(-lam * s_last)
                            + part * np.exp(-mu * s_last))
    tail = RingdownTail(t_end=pulse_T + s_last, lam=lam, mu=mu,
                        beta_end=beta_last, sigma_end=complex(sigma_last),
                        kappa=series.kappa, degenerate=degenerate)
    return replace(series, beta=np.concatenate([series.beta, ext]), tail=tail)


def mode_intensity(beta: complex, eta: float, scale: float = 1.0) -> float:
    """Observable intensity eta |beta|^2 times the dimensional scale."""
    if eta <= 0 or scale <= 0:
        raise ParameterError("mode_intensity requires eta > 0 and scale > 0")
    return scale * eta * abs(beta) ** 2


def _tail_integral(tail: RingdownTail) -> float:
    """Integral of |beta(t)|^2 from the tail start to infinity.

    Writing beta(s) = b0 e^{-lam s} - kappa sigma0 G(s) with the
    pole-difference kernel G = (e^{-lam s} - e^{-mu s})/(mu - lam), every
    term integrates in closed form without the 1/(mu - lam) amplitudes, so
    the result stays accurate arbitrarily close to coinciding poles:

        |b0|^2/a - 2 Re(b0 conj(kappa sigma0) / (a (lam + conj(mu))))
                 + |kappa sigma0|^2 (a + b) / (a b |lam + conj(mu)|^2)

    with a = 2 Re lam, b = 2 Re mu.  Infinite when the polarization never
    decays (b = 0) while its amplitude is nonzero.
    """
    a = 2.0 * tail.lam.real
    b0 = tail.beta_end
    force = tail.kappa * tail.sigma_end
    if abs(force) == 0.0:
        return abs(b0) ** 2 / a
    b = 2.0 * tail.mu.real
    if b <= 0.0:
        return math.inf
    lam_mu = tail.lam + np.conj(tail.mu)
    cross = -2.0 * (b0 * np.conj(force) / (a * lam_mu)).real
    return abs(b0) ** 2 / a + cross + abs(force) ** 2 * (a + b) / (a * b * abs(lam_mu) ** 2)


def integrated_intensity(series: ModeAmplitudeSeries, eta: float, scale: float = 1.0) -> float:
    """Time-integrated intensity: trapezoid over the samples plus exact tail.

    Without ring-down information the tail assumes free mode decay from the
    last sample, contributing scale * |beta_end|^2.
    """
    if eta <= 0 or scale <= 0:
        raise ParameterError("integrated_intensity requires eta > 0 and scale > 0")
    power = np.abs(series.beta) ** 2
    body = float(np.trapezoid(power, dx=series.dt)) if len(power) > 1 else 0.0
    if series.tail is not None:
        tail = _tail_integral(series.tail)
    else:
        tail = power[-1] / eta
    return max(scale * eta * (body + tail), 0.0)


def _sweep_chunk(traj: PolarizationTrajectory, grid: ModeGrid, start: int, stop: int,
                 det_index: int, t_end: float,
                 i_det: np.ndarray, i_int: np.ndarray) -> None:
    lam = 0.5 * grid.eta[start:stop] + 1j * grid.nu[start:stop]
    beta = _evolve_batch(traj.samples, traj.dt, lam, grid.coupling)
    final = traj.final_state
    for k in range(stop - start):
        series = ModeAmplitudeSeries(
            mode_index=start + k, nu=float(grid.nu[start + k]), eta=float(grid.eta[start + k]),
            kappa=grid.coupling, t0=traj.t0, dt=traj.dt, beta=beta[k])
        series = ringdown_extend(series, final, traj.pulse.duration, traj.medium,
                                 traj.pulse.detuning, t_end)
        i_det[start + k] = mode_intensity(complex(series.beta[det_index]), series.eta,
                                          grid.intensity_scale)
        i_int[start + k] = integrated_intensity(series, series.eta, grid.intensity_scale)


def spectrum_sweep(traj: PolarizationTrajectory, grid: ModeGrid,
                   detection_time: float | None = None, t_end: float | None = None,
                   threads: int | None = None) -> Spectrum:
    """Evolve every mode of the grid and collect both intensity columns.

    Modes are independent; they are processed in fixed-size batches that may
    run on a thread pool, and the output is ordered by mode index regardless
    of scheduling.  ``detection_time`` defaults to the end of the pulse and
    must land on the sample grid within half a step.
    """
    pulse_T = traj.pulse.duration
    if detection_time is None:
        detection_time = pulse_T
    if t_end is None:
        t_end = max(detection_time, pulse_T)
    if not traj.t0 <= detection_time <= t_end:
        raise ParameterError("need t0 <= detection_time <= t_end")
    det_index = round((detection_time - traj.t0) / traj.dt)
    if abs(traj.t0 + det_index * traj.dt - detection_time) > 0.5 * traj.dt:
        raise ParameterError("detection_time does not land on the sample grid")

    n = len(grid)
    i_det = np.empty(n)
    i_int = np.empty(n)
    spans = [(s, min(s + SWEEP_CHUNK, n)) for s in range(0, n, SWEEP_CHUNK)]
    if threads is None or threads <= 1 or len(spans) == 1:
        for start, stop in spans:
            _sweep_chunk(traj, grid, start, stop, det_index, t_end, i_det, i_int)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_sweep_chunk, traj, grid, start, stop,
                                   det_index, t_end, i_det, i_int)
                       for start, stop in spans]
            for f in futures:
                f.result()
    params = {
        "kind": "simulation",
        "rabi": traj.pulse.rabi, "duration": pulse_T, "detuning": traj.pulse.detuning,
        "local_field": traj.medium.local_field, "gamma": traj.medium.gamma,
        "gamma2": traj.medium.gamma2, "kappa": grid.coupling,
        "intensity_scale": grid.intensity_scale, "dt": traj.dt,
    }
    return Spectrum(nu=grid.nu.copy(), intensity_at_detection=i_det, integrated=i_int,
                    detection_time=traj.t0 + det_index * traj.dt, t_end=t_end, params=params)
