"""Transient stimulated-scattering spectra in a dense two-level medium.

The pipeline is triangular: the atomic coherence never depends on the
scattered modes, so the atom is integrated once (``bloch``), every detector
mode is then driven by the recorded coherence (``field``), and the result is
reduced to spectra and peak tables (``analysis``).  The ``analytic`` module
carries the independent first-order Bessel-series spectrum used for
cross-validation.
"""

from .analysis import (LineAssignments, Peak, PeakSet, SpectrumComparison,
                       compare_spectra, find_peaks, find_peaks_xy, line_ratios)
from .analytic import (HarmonicCoefficients, LineIntensityTable, ResonanceFactor,
                       default_truncation, harmonic_coefficients, line_intensity_curve,
                       perturbative_spectrum, resonance_factor, resonance_weight_printed)
from .bloch import (AtomicDerivative, AtomicState, MediumParams, PolarizationTrajectory,
                    PulseParams, bloch_derivative, effective_drive, excited_state,
                    first_order_state, ground_state, integrate_atom,
                    local_field_coefficient, resolution_limit_dt, zero_order_state)
from .config import (PRESETS, GridSpec, NumericsSpec, OutputSpec, ScenarioConfig,
                     load_config, parse_config, preset_config, write_config)
from .errors import (AccuracyError, ConfigError, GridMismatchError, LfscatterError,
                     NumericalError, ParameterError)
from .field import (ModeAmplitudeSeries, ModeGrid, RingdownTail, Spectrum,
                    evolve_mode, integrated_intensity, mode_intensity,
                    ringdown_extend, spectrum_sweep)

__version__ = "0.1.0"
