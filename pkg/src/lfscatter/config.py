"""Scenario configuration: presets, the key=value config format, manifests.

A scenario bundles the pulse, the medium, the detector grid, numeric
controls and output options.  Presets reproduce the published figure
parameter sets; a config file can start from a preset and override
individual keys.

Config files are line oriented, UTF-8, ``#`` comments, with sections::

    preset = fig2a          # optional, applied first

    [pulse]
    rabi = 31.41592653589793
    duration = 1.9
    detuning = 0.0

    [medium]
    b = 0.32                # or local_field = C; gamma / gamma2 as needed

    [grid]
    nu_min = -376.99
    nu_max = 376.99
    n_modes = 2001
    eta = 5.0

    [numerics]
    dt = 0.0003             # optional; default resolves the fastest scale

    [output]
    directory = out
    normalization = raw     # or unit-max
    plot = true

Unknown sections or keys are errors (with the offending line number), as are
constraint violations (with the field name).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .bloch import MediumParams, PulseParams, resolution_limit_dt
from .errors import ConfigError
from .field import ModeGrid

NORMALIZATIONS = ("raw", "unit-max")

#: Default grid half-width in units of the Rabi splitting 2R.
GRID_SPAN_RABI = 6.0
DEFAULT_N_MODES = 2001


@dataclass(frozen=True)
class GridSpec:
    nu_min: float
    nu_max: float
    n_modes: int
    eta: float
    kappa: float = 1.0
    intensity_scale: float = 1.0

    def __post_init__(self):
        if not self.nu_min < self.nu_max:
            raise ConfigError(f"grid.nu_min={self.nu_min} must be < grid.nu_max={self.nu_max}")
        if self.n_modes < 3:
            raise ConfigError(f"grid.n_modes must be >= 3, got {self.n_modes}")
        if self.eta <= 0:
            raise ConfigError(f"grid.eta must be > 0, got {self.eta}")
        if self.kappa <= 0 or self.intensity_scale <= 0:
            raise ConfigError("grid.kappa and grid.intensity_scale must be > 0")

    def to_mode_grid(self) -> ModeGrid:
        return ModeGrid.linspace(self.nu_min, self.nu_max, self.n_modes, self.eta,
                                 coupling=self.kappa, intensity_scale=self.intensity_scale)

    @property
    def spacing(self) -> float:
        return (self.nu_max - self.nu_min) / (self.n_modes - 1)


@dataclass(frozen=True)
class NumericsSpec:
    """Optional overrides; ``None`` means use the documented default."""

    dt: float | None = None
    t_end: float | None = None
    detection_time: float | None = None
    truncation_order: int | None = None


@dataclass(frozen=True)
class OutputSpec:
    directory: str = "."
    basename: str | None = None
    normalization: str = "raw"
    plot: bool = True

    def __post_init__(self):
        if self.normalization not in NORMALIZATIONS:
            raise ConfigError(
                f"output.normalization must be one of {NORMALIZATIONS}, "
                f"got {self.normalization!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    pulse: PulseParams
    medium: MediumParams
    grid: GridSpec
    numerics: NumericsSpec = field(default_factory=NumericsSpec)
    output: OutputSpec = field(default_factory=OutputSpec)

    @property
    def feedback_strength(self) -> float:
        return self.medium.feedback_strength(self.pulse.rabi)

    def resolved_dt(self) -> float:
        from .bloch import DT_SAFETY
        return self.numerics.dt if self.numerics.dt is not None \
            else resolution_limit_dt(self.pulse) / DT_SAFETY

    def resolved_detection_time(self) -> float:
        return self.numerics.detection_time if self.numerics.detection_time is not None \
            else self.pulse.duration

    def resolved_t_end(self) -> float:
        return self.numerics.t_end if self.numerics.t_end is not None \
            else max(self.pulse.duration, self.resolved_detection_time())

    def resolved_truncation(self) -> int:
        from .analytic import default_truncation
        return self.numerics.truncation_order if self.numerics.truncation_order is not None \
            else default_truncation(self.feedback_strength)

    def manifest(self) -> dict:
        """Every parameter any stage consumes, as flat dotted keys."""
        return {
            "name": self.name,
            "pulse.rabi": self.pulse.rabi,
            "pulse.duration": self.pulse.duration,
            "pulse.detuning": self.pulse.detuning,
            "pulse.area": self.pulse.area,
            "medium.local_field": self.medium.local_field,
            "medium.b": self.feedback_strength,
            "medium.gamma": self.medium.gamma,
            "medium.gamma2": self.medium.gamma2,
            "grid.nu_min": self.grid.nu_min,
            "grid.nu_max": self.grid.nu_max,
            "grid.n_modes": self.grid.n_modes,
            "grid.eta": self.grid.eta,
            "grid.kappa": self.grid.kappa,
            "grid.intensity_scale": self.grid.intensity_scale,
            "numerics.dt": self.resolved_dt(),
            "numerics.t_end": self.resolved_t_end(),
            "numerics.detection_time": self.resolved_detection_time(),
            "numerics.truncation_order": self.resolved_truncation(),
            "output.normalization": self.output.normalization,
        }


def _figure_preset(name: str, b: float, eta: float, duration: float,
                   gamma: float = 0.01, gamma2: float = 0.0,
                   detuning: float = 0.0) -> ScenarioConfig:
    rabi = 10.0 * math.pi
    span = GRID_SPAN_RABI * 2.0 * rabi
    return ScenarioConfig(
        name=name,
        pulse=PulseParams(rabi=rabi, duration=duration, detuning=detuning),
        medium=MediumParams.from_feedback_strength(b, rabi, gamma=gamma, gamma2=gamma2),
        grid=GridSpec(nu_min=-span, nu_max=span, n_modes=DEFAULT_N_MODES, eta=eta),
    )


# Published figure parameter sets; all share R = 10*pi.
PRESETS: dict[str, ScenarioConfig] = {
    "fig2a": _figure_preset("fig2a", b=0.32, eta=5.0, duration=1.9),
    "fig2b": _figure_preset("fig2b", b=0.64, eta=5.0, duration=1.9),
    "fig2c": _figure_preset("fig2c", b=0.85, eta=5.0, duration=1.9),
    "fig2d": _figure_preset("fig2d", b=1.2, eta=5.0, duration=1.9),
    "fig3a": _figure_preset("fig3a", b=0.28, eta=0.1, duration=0.3),
    "fig3b": _figure_preset("fig3b", b=0.36, eta=0.1, duration=0.5),
    "fig4": _figure_preset("fig4", b=0.74, eta=1.0, duration=1.0, gamma=0.5, gamma2=9.0),
}


def preset_config(name: str) -> ScenarioConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    return PRESETS[name]


_SCHEMA = {
    "": {"preset": str, "name": str},
    "pulse": {"rabi": float, "duration": float, "detuning": float},
    "medium": {"b": float, "local_field": float, "gamma": float, "gamma2": float},
    "grid": {"nu_min": float, "nu_max": float, "n_modes": int, "eta": float,
             "kappa": float, "intensity_scale": float},
    "numerics": {"dt": float, "t_end": float, "detection_time": float,
                 "truncation_order": int},
    "output": {"directory": str, "basename": str, "normalization": str, "plot": bool},
}


def _parse_bool(text: str, line_no: int) -> bool:
    lowered = text.lower()
    if lowered in ("true", "yes", "1"):
        return True
    if lowered in ("false", "no", "0"):
        return False
    raise ConfigError(f"line {line_no}: expected a boolean, got {text!r}")


def _parse_entries(text: str) -> dict[tuple[str, str], tuple[object, int]]:
    entries: dict[tuple[str, str], tuple[object, int]] = {}
    section = ""
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SCHEMA or section == "":
                raise ConfigError(f"line {line_no}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected key = value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        schema = _SCHEMA[section]
        if key not in schema:
            where = f"[{section}]" if section else "top level"
            raise ConfigError(f"line {line_no}: unknown key {key!r} in {where}")
        kind = schema[key]
        try:
            if kind is bool:
                parsed = _parse_bool(value, line_no)
            elif kind is str:
                parsed = value
            else:
                parsed = kind(value)
        except ValueError as exc:
            raise ConfigError(f"line {line_no}: bad value for {key!r}: {exc}") from None
        entries[(section, key)] = (parsed, line_no)
    return entries


def _config_to_entries(config: ScenarioConfig) -> dict[tuple[str, str], object]:
    out: dict[tuple[str, str], object] = {("", "name"): config.name}
    out[("pulse", "rabi")] = config.pulse.rabi
    out[("pulse", "duration")] = config.pulse.duration
    out[("pulse", "detuning")] = config.pulse.detuning
    out[("medium", "local_field")] = config.medium.local_field
    out[("medium", "gamma")] = config.medium.gamma
    out[("medium", "gamma2")] = config.medium.gamma2
    for key in ("nu_min", "nu_max", "n_modes", "eta", "kappa", "intensity_scale"):
        out[("grid", key)] = getattr(config.grid, key)
    for key in ("dt", "t_end", "detection_time", "truncation_order"):
        value = getattr(config.numerics, key)
        if value is not None:
            out[("numerics", key)] = value
    out[("output", "directory")] = config.output.directory
    if config.output.basename is not None:
        out[("output", "basename")] = config.output.basename
    out[("output", "normalization")] = config.output.normalization
    out[("output", "plot")] = config.output.plot
    return out


def _build_config(entries: dict[tuple[str, str], object]) -> ScenarioConfig:
    def pop(section, key, default=None):
        return entries.pop((section, key), default)

    name = pop("", "name", "scenario")
    try:
        rabi = pop("pulse", "rabi")
        duration = pop("pulse", "duration")
        if rabi is None or duration is None:
            raise ConfigError("pulse.rabi and pulse.duration are required")
        pulse = PulseParams(rabi=rabi, duration=duration,
                            detuning=pop("pulse", "detuning", 0.0))

        b = pop("medium", "b")
        c = pop("medium", "local_field")
        gamma = pop("medium", "gamma", 0.0)
        gamma2 = pop("medium", "gamma2", 0.0)
        if b is not None and c is not None:
            raise ConfigError("medium.b and medium.local_field are mutually exclusive")
        if b is not None:
            medium = MediumParams.from_feedback_strength(b, pulse.rabi,
                                                         gamma=gamma, gamma2=gamma2)
        elif c is not None:
            medium = MediumParams(local_field=c, gamma=gamma, gamma2=gamma2)
        else:
            raise ConfigError("one of medium.b or medium.local_field is required")

        eta = pop("grid", "eta")
        if eta is None:
            raise ConfigError("grid.eta is required")
        span = GRID_SPAN_RABI * 2.0 * pulse.rabi
        grid = GridSpec(nu_min=pop("grid", "nu_min", -span),
                        nu_max=pop("grid", "nu_max", span),
                        n_modes=pop("grid", "n_modes", DEFAULT_N_MODES),
                        eta=eta,
                        kappa=pop("grid", "kappa", 1.0),
                        intensity_scale=pop("grid", "intensity_scale", 1.0))
        numerics = NumericsSpec(dt=pop("numerics", "dt"),
                                t_end=pop("numerics", "t_end"),
                                detection_time=pop("numerics", "detection_time"),
                                truncation_order=pop("numerics", "truncation_order"))
        output = OutputSpec(directory=pop("output", "directory", "."),
                            basename=pop("output", "basename"),
                            normalization=pop("output", "normalization", "raw"),
                            plot=pop("output", "plot", True))
    except ConfigError:
        raise
    except Exception as exc:  # parameter validation from the domain types
        raise ConfigError(str(exc)) from exc
    return ScenarioConfig(name=name, pulse=pulse, medium=medium, grid=grid,
                          numerics=numerics, output=output)


def parse_config(text: str) -> ScenarioConfig:
    """Build a scenario from config text, applying any ``preset`` first."""
    raw = _parse_entries(text)
    entries = {key: value for key, (value, _) in raw.items()}
    preset_name = entries.pop(("", "preset"), None)
    if preset_name is not None:
        base = _config_to_entries(preset_config(str(preset_name)))
        base.setdefault(("", "name"), str(preset_name))
        # an explicit b (or local_field) displaces the preset's counterpart
        if ("medium", "b") in entries:
            base.pop(("medium", "local_field"), None)
        if ("medium", "local_field") in entries:
            base.pop(("medium", "b"), None)
        base.update(entries)
        entries = base
    return _build_config(entries)


def load_config(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_config(handle.read())


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_config(config: ScenarioConfig, path) -> None:
    """Write a config file that loads back to an identical scenario."""
    entries = _config_to_entries(config)
    sections: dict[str, list[str]] = {}
    for (section, key), value in entries.items():
        sections.setdefault(section, []).append(f"{key} = {_format_value(value)}")
    lines = []
    for line in sections.get("", []):
        lines.append(line)
    for section in ("pulse", "medium", "grid", "numerics", "output"):
        if section in sections:
            lines.append("")
            lines.append(f"[{section}]")
            lines.extend(sections[section])
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")


def with_output(config: ScenarioConfig, **kwargs) -> ScenarioConfig:
    return replace(config, output=replace(config.output, **kwargs))
