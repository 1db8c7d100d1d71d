"""Two-level atom driven by a rectangular pulse with a coherence feedback term.

The density matrix in the rotating frame is parameterized by the two
populations and the coherence sigma = <2|rho|1>.  While the pulse is on, the
bare Rabi amplitude R is shifted by the medium's own polarization,
E = R - C*sigma, which makes the equations nonlinear; C is proportional to
the atomic density.  The dimensionless feedback strength is B = C/(2R).

For small B the pulse-window dynamics has the closed form
sigma(t) = sin(V(t))/2 with accumulated phase V(t) = 2Rt - B(1 - cos 2Rt);
``zero_order_state`` and ``first_order_state`` expose those solutions as
oracles for the numerical integrator.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import AccuracyError, NumericalError, ParameterError

TRACE_TOL = 1e-9
POPULATION_TOL = 1e-9
POSITIVITY_TOL = 1e-9

#: Default ratio between the resolution-limit step and the step actually used.
#: 8 keeps the positivity defect of strongly nonlinear runs below the state
#: tolerance (the defect scales like the fourth power of the step).
DT_SAFETY = 8.0


def _require_finite(**values) -> None:
    for name, value in values.items():
        ok = cmath.isfinite(value) if isinstance(value, complex) else math.isfinite(value)
        if not ok:
            raise ParameterError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class AtomicState:
    """Populations and coherence of the 2x2 density matrix.

    ``coherence`` is sigma_21 = <2|rho|1>; the conjugate element is implied.
    Construction enforces trace preservation, population bounds and
    positivity at the module tolerances.
    """

    pop_ground: float
    pop_excited: float
    coherence: complex

    def __post_init__(self):
        _require_finite(pop_ground=self.pop_ground, pop_excited=self.pop_excited,
                        coherence=complex(self.coherence))
        if abs(self.trace - 1.0) > TRACE_TOL:
            raise NumericalError(f"trace deviates from 1 by {self.trace - 1.0:.3e}")
        for name, p in (("pop_ground", self.pop_ground), ("pop_excited", self.pop_excited)):
            if not -POPULATION_TOL <= p <= 1.0 + POPULATION_TOL:
                raise NumericalError(f"{name}={p!r} outside [0, 1]")
        if self.positivity_defect < -POSITIVITY_TOL:
            raise NumericalError(f"positivity violated: det defect {self.positivity_defect:.3e}")

    @property
    def trace(self) -> float:
        return self.pop_ground + self.pop_excited

    @property
    def positivity_defect(self) -> float:
        """rho11*rho22 - |sigma|^2; zero for a pure state, >0 for mixed."""
        return self.pop_ground * self.pop_excited - abs(self.coherence) ** 2

    @property
    def inversion(self) -> float:
        """Population difference rho11 - rho22 entering the coherence drive."""
        return self.pop_ground - self.pop_excited


def ground_state() -> AtomicState:
    return AtomicState(1.0, 0.0, 0j)


def excited_state() -> AtomicState:
    return AtomicState(0.0, 1.0, 0j)


@dataclass(frozen=True)
class AtomicDerivative:
    """Time derivative of an AtomicState (not constrained to be physical)."""

    pop_ground: float
    pop_excited: float
    coherence: complex


@dataclass(frozen=True)
class PulseParams:
    """Rectangular pulse: amplitude ``rabi`` (R) on 0 <= t < ``duration`` (T).

    ``detuning`` is the transition frequency minus the carrier frequency.
    The Rabi splitting is 2R and the pulse area is 2RT.
    """

    rabi: float
    duration: float
    detuning: float = 0.0

    def __post_init__(self):
        _require_finite(rabi=self.rabi, duration=self.duration, detuning=self.detuning)
        if self.rabi < 0:
            raise ParameterError(f"rabi must be >= 0, got {self.rabi}")
        if self.duration <= 0:
            raise ParameterError(f"duration must be > 0, got {self.duration}")

    @property
    def area(self) -> float:
        return 2.0 * self.rabi * self.duration

    def drive(self, t: float) -> float:
        return self.rabi if 0.0 <= t < self.duration else 0.0


@dataclass(frozen=True)
class MediumParams:
    """Medium constants: feedback coefficient C and relaxation rates.

    ``local_field`` is the coefficient C of the coherence-proportional drive
    shift (angular frequency units); ``gamma`` is the population decay rate
    and ``gamma2`` the extra collisional dephasing rate of the coherence.
    """

    local_field: float
    gamma: float = 0.0
    gamma2: float = 0.0

    def __post_init__(self):
        _require_finite(local_field=self.local_field, gamma=self.gamma, gamma2=self.gamma2)
        for name in ("local_field", "gamma", "gamma2"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0, got {getattr(self, name)}")

    @property
    def coherence_decay(self) -> float:
        """Total transverse rate gamma/2 + gamma2."""
        return 0.5 * self.gamma + self.gamma2

    def feedback_strength(self, rabi: float) -> float:
        """Dimensionless B = C/(2R)."""
        if rabi <= 0:
            raise ParameterError("feedback_strength requires rabi > 0")
        return self.local_field / (2.0 * rabi)

    @classmethod
    def from_feedback_strength(cls, b: float, rabi: float,
                               gamma: float = 0.0, gamma2: float = 0.0) -> "MediumParams":
        """Build from B and R via C = 2*B*R."""
        _require_finite(b=b, rabi=rabi)
        if b < 0 or rabi <= 0:
            raise ParameterError("from_feedback_strength requires b >= 0 and rabi > 0")
        return cls(local_field=2.0 * b * rabi, gamma=gamma, gamma2=gamma2)

    @classmethod
    def from_density(cls, density: float, geometry: float, wavelength: float,
                     gamma: float, gamma2: float = 0.0) -> "MediumParams":
        c = local_field_coefficient(density, geometry, wavelength, gamma)
        return cls(local_field=c, gamma=gamma, gamma2=gamma2)


def local_field_coefficient(density: float, geometry: float,
                            wavelength: float, gamma: float) -> float:
    """Feedback coefficient C = 3 n G lambda^3 gamma / (16 pi^2).

    ``geometry`` is the dimensionless sample/polarization factor; it may be
    negative, in which case C is negative and the caller is on their own.
    """
    _require_finite(density=density, geometry=geometry,
                    wavelength=wavelength, gamma=gamma)
    if density < 0 or wavelength <= 0 or gamma < 0:
        raise ParameterError("density and gamma must be >= 0 and wavelength > 0")
    return 3.0 * density * geometry * wavelength**3 * gamma / (16.0 * math.pi**2)


def effective_drive(coherence: complex, drive: float, local_field: float) -> complex:
    """Drive amplitude shifted by the medium polarization: R - C*sigma."""
    return drive - local_field * coherence


def bloch_derivative(state: AtomicState, t: float, pulse: PulseParams,
                     medium: MediumParams) -> AtomicDerivative:
    """Right-hand side of the driven, damped density-matrix equation.

    The laser drive (and with it the coherence feedback shift) acts only for
    0 <= t < pulse.duration; afterwards the coherence decays freely at
    i*detuning + gamma/2 + gamma2 and the excited population at gamma.
    """
    _require_finite(t=t)
    drive_on = 0.0 <= t < pulse.duration
    e = effective_drive(state.coherence, pulse.rabi, medium.local_field) if drive_on else 0j
    s = state.coherence
    pump = 2.0 * (e.real * s.real + e.imag * s.imag)  # 2 Re(E* sigma)
    dpe = pump - medium.gamma * state.pop_excited
    dpg = -pump + medium.gamma * state.pop_excited
    ds = e * state.inversion - (1j * pulse.detuning + medium.coherence_decay) * s
    return AtomicDerivative(dpg, dpe, ds)


def zero_order_state(t: float, rabi: float) -> AtomicState:
    """Closed-form state with no feedback, no detuning, no damping."""
    _require_finite(t=t, rabi=rabi)
    if t < 0 or rabi < 0:
        raise ParameterError("zero_order_state requires t >= 0 and rabi >= 0")
    phase = 2.0 * rabi * t
    return AtomicState(0.5 * (1.0 + math.cos(phase)),
                       0.5 * (1.0 - math.cos(phase)),
                       complex(0.5 * math.sin(phase), 0.0))


def first_order_state(t: float, rabi: float, b: float) -> AtomicState:
    """Closed-form state to first order in B.

    Same trigonometric form as the zeroth order but with the distorted phase
    V(t) = 2Rt - B(1 - cos 2Rt).  Meaningful for B << 1.
    """
    _require_finite(t=t, rabi=rabi, b=b)
    if t < 0 or rabi < 0:
        raise ParameterError("first_order_state requires t >= 0 and rabi >= 0")
    v = 2.0 * rabi * t - b * (1.0 - math.cos(2.0 * rabi * t))
    return AtomicState(0.5 * (1.0 + math.cos(v)),
                       0.5 * (1.0 - math.cos(v)),
                       complex(0.5 * math.sin(v), 0.0))


@dataclass(frozen=True)
class PolarizationTrajectory:
    """Uniformly sampled coherence record produced by ``integrate_atom``.

    ``samples[i]`` is sigma_21 at ``t0 + i*dt``; ``pulse_end_index`` is the
    first sample index with t >= pulse.duration (the grid always contains the
    pulse edge exactly).  The pulse and medium used for the integration ride
    along so downstream stages can reconstruct decay rates.
    """

    t0: float
    dt: float
    samples: np.ndarray
    final_state: AtomicState
    pulse_end_index: int
    pulse: PulseParams
    medium: MediumParams
    populations: np.ndarray | None = None  # (n, 2) ground/excited, opt-in

    def __post_init__(self):
        if self.dt <= 0:
            raise ParameterError(f"dt must be > 0, got {self.dt}")
        if len(self.samples) == 0:
            raise ParameterError("trajectory must contain at least one sample")
        if not 0 <= self.pulse_end_index < len(self.samples):
            raise ParameterError("pulse_end_index outside the sample range")

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.samples))

    @property
    def pulse_end_coherence(self) -> complex:
        return complex(self.samples[self.pulse_end_index])


def resolution_limit_dt(pulse: PulseParams) -> float:
    """Largest step that still resolves the fastest scale in the problem."""
    dt = pulse.duration / 100.0
    if pulse.rabi > 0:
        dt = min(dt, 1.0 / (20.0 * pulse.rabi))
    if pulse.detuning != 0:
        dt = min(dt, 1.0 / (20.0 * abs(pulse.detuning)))
    return dt


def integrate_atom(pulse: PulseParams, medium: MediumParams, dt: float | None = None,
                   t_end: float | None = None, initial: AtomicState | None = None,
                   audit: bool = True, audit_tol: float = 1e-6,
                   keep_populations: bool = False) -> PolarizationTrajectory:
    """Integrate the atomic equation with a fixed-step classical RK4 scheme.

    The step grid contains the pulse edge t = duration exactly, so each RK4
    step sees a constant drive.  A step-halving self-check re-runs the
    integration at dt/2 and raises AccuracyError when the two solutions
    disagree by more than ``audit_tol`` in max norm.

    Returns samples on [0, duration] by default; pass ``t_end`` > duration to
    continue through the free decay on the same grid.
    """
    limit = resolution_limit_dt(pulse)
    if dt is None:
        dt = limit / DT_SAFETY
    else:
        _require_finite(dt=dt)
        if dt <= 0:
            raise ParameterError(f"dt must be > 0, got {dt}")
        if dt > limit * (1.0 + 1e-12):
            raise ParameterError(
                f"dt={dt:.6g} does not resolve the fastest scale; need dt <= {limit:.6g}")
    n_pulse = max(1, math.ceil(pulse.duration / dt - 1e-9))
    h = pulse.duration / n_pulse
    if t_end is None:
        t_end = pulse.duration
    elif t_end < pulse.duration:
        raise ParameterError("t_end must be >= pulse.duration")
    n_post = max(0, math.ceil((t_end - pulse.duration) / h - 1e-9))
    if initial is None:
        initial = ground_state()

    pg, pe, sig = _run_rk4(pulse, medium, initial, h, n_pulse, n_post)
    if audit:
        pg2, pe2, sig2 = _run_rk4(pulse, medium, initial, h / 2.0, 2 * n_pulse, 2 * n_post)
        diff = max(np.max(np.abs(pg - pg2[::2])), np.max(np.abs(pe - pe2[::2])),
                   np.max(np.abs(sig - sig2[::2])))
        if diff > audit_tol:
            suggested = h * (audit_tol / diff) ** 0.25
            raise AccuracyError(
                f"step-halving discrepancy {diff:.3e} exceeds {audit_tol:.1e}; "
                f"retry with dt <= {suggested:.3e}")

    _check_invariants(pg, pe, sig)
    final = AtomicState(float(pg[-1]), float(pe[-1]), complex(sig[-1]))
    populations = np.column_stack([pg, pe]) if keep_populations else None
    return PolarizationTrajectory(t0=0.0, dt=h, samples=sig, final_state=final,
                                  pulse_end_index=n_pulse, pulse=pulse, medium=medium,
                                  populations=populations)


def _run_rk4(pulse: PulseParams, medium: MediumParams, initial: AtomicState,
             h: float, n_pulse: int, n_post: int):
    n_total = n_pulse + n_post
    pg = np.empty(n_total + 1)
    pe = np.empty(n_total + 1)
    sig = np.empty(n_total + 1, dtype=complex)
    pg[0], pe[0], sig[0] = initial.pop_ground, initial.pop_excited, initial.coherence

    gamma = medium.gamma
    c = medium.local_field
    decay = complex(medium.coherence_decay, pulse.detuning)  # gamma/2 + gamma2 + i*Delta

    def deriv(g, e_pop, s, drive):
        # During the pulse the feedback shifts the drive; afterwards both are off.
        ed = drive - c * s if drive else 0j
        pump = 2.0 * (ed.real * s.real + ed.imag * s.imag)
        dpe = pump - gamma * e_pop
        ds = ed * (g - e_pop) - decay * s
        return -dpe, dpe, ds

    g, e_pop, s = pg[0], pe[0], sig[0] + 0j
    for i in range(n_total):
        drive = pulse.rabi if i < n_pulse else 0.0
        k1 = deriv(g, e_pop, s, drive)
        k2 = deriv(g + 0.5 * h * k1[0], e_pop + 0.5 * h * k1[1], s + 0.5 * h * k1[2], drive)
        k3 = deriv(g + 0.5 * h * k2[0], e_pop + 0.5 * h * k2[1], s + 0.5 * h * k2[2], drive)
        k4 = deriv(g + h * k3[0], e_pop + h * k3[1], s + h * k3[2], drive)
        g += h / 6.0 * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0])
        e_pop += h / 6.0 * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1])
        s += h / 6.0 * (k1[2] + 2.0 * (k2[2] + k3[2]) + k4[2])
        pg[i + 1], pe[i + 1], sig[i + 1] = g, e_pop, s
    return pg, pe, sig


def _check_invariants(pg: np.ndarray, pe: np.ndarray, sig: np.ndarray) -> None:
    trace_err = np.max(np.abs(pg + pe - 1.0))
    if trace_err > TRACE_TOL:
        raise NumericalError(f"trace drifted by {trace_err:.3e} during integration")
    if np.min(pg) < -POPULATION_TOL or np.min(pe) < -POPULATION_TOL \
            or np.max(pg) > 1.0 + POPULATION_TOL or np.max(pe) > 1.0 + POPULATION_TOL:
        raise NumericalError("population left [0, 1] during integration")
    defect = np.min(pg * pe - np.abs(sig) ** 2)
    if defect < -POSITIVITY_TOL:
        raise NumericalError(f"positivity violated during integration: {defect:.3e}")
