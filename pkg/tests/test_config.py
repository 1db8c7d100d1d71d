"""Config format, presets and manifest tests."""

import math

import pytest

import lfscatter as lf
from lfscatter.config import GridSpec, OutputSpec

R = 10 * math.pi


def test_fig2a_preset_values():
    cfg = lf.preset_config("fig2a")
    assert cfg.pulse.rabi == pytest.approx(R)
    assert cfg.pulse.duration == 1.9
    assert cfg.pulse.detuning == 0.0
    assert cfg.medium.gamma == 0.01
    assert cfg.medium.gamma2 == 0.0
    assert cfg.grid.eta == 5.0
    assert cfg.feedback_strength == pytest.approx(0.32, rel=1e-15)
    assert cfg.medium.local_field == pytest.approx(6.4 * math.pi, rel=1e-15)


def test_fig3b_preset_values():
    cfg = lf.preset_config("fig3b")
    assert cfg.grid.eta == 0.1
    assert cfg.pulse.duration == 0.5
    assert cfg.feedback_strength == pytest.approx(0.36, rel=1e-15)
    assert cfg.pulse.rabi == pytest.approx(R)
    assert cfg.medium.gamma == 0.01


def test_fig4_preset_values():
    cfg = lf.preset_config("fig4")
    assert cfg.medium.gamma == 0.5
    assert cfg.medium.gamma2 == 9.0
    assert cfg.grid.eta == 1.0
    assert cfg.pulse.duration == 1.0
    assert cfg.feedback_strength == pytest.approx(0.74, rel=1e-15)


def test_fig2_family_spans_published_densities():
    values = [lf.preset_config(n).feedback_strength for n in
              ("fig2a", "fig2b", "fig2c", "fig2d")]
    assert values == pytest.approx([0.32, 0.64, 0.85, 1.2])


def test_unknown_preset_rejected():
    with pytest.raises(lf.ConfigError, match="unknown preset"):
        lf.preset_config("fig9")


def test_default_grid_spans_six_rabi_splittings():
    cfg = lf.preset_config("fig2a")
    assert cfg.grid.nu_max == pytest.approx(6 * 2 * R)
    assert cfg.grid.n_modes == 2001


def test_roundtrip_write_then_load(tmp_path):
    cfg = lf.preset_config("fig3a")
    path = tmp_path / "scenario.cfg"
    lf.write_config(cfg, path)
    again = lf.load_config(path)
    assert again == cfg


def test_parse_minimal_config():
    cfg = lf.parse_config("""
        # minimal scenario
        [pulse]
        rabi = 10.0
        duration = 0.5

        [medium]
        b = 0.1

        [grid]
        eta = 1.0
    """)
    assert cfg.pulse.rabi == 10.0
    assert cfg.medium.local_field == pytest.approx(2.0)
    assert cfg.grid.nu_max == pytest.approx(6 * 2 * 10.0)
    assert cfg.output.normalization == "raw"


def test_preset_with_overrides():
    cfg = lf.parse_config("""
        preset = fig2a
        [medium]
        b = 0.5
    """)
    assert cfg.feedback_strength == pytest.approx(0.5)
    assert cfg.pulse.duration == 1.9  # inherited
    assert cfg.name == "fig2a"


def test_unknown_key_reports_line_number():
    with pytest.raises(lf.ConfigError, match=r"line 3: unknown key 'frequency'"):
        lf.parse_config("[pulse]\nrabi = 1.0\nfrequency = 2.0\n")


def test_unknown_section_rejected():
    with pytest.raises(lf.ConfigError, match=r"unknown section"):
        lf.parse_config("[laser]\npower = 1.0\n")


def test_bad_value_reports_line():
    with pytest.raises(lf.ConfigError, match="line 2"):
        lf.parse_config("[pulse]\nrabi = fast\n")


def test_constraint_violation_names_field():
    with pytest.raises(lf.ConfigError, match="n_modes"):
        GridSpec(nu_min=-1.0, nu_max=1.0, n_modes=2, eta=1.0)
    with pytest.raises(lf.ConfigError, match="duration"):
        lf.parse_config("[pulse]\nrabi = 1.0\nduration = -2\n[medium]\nb = 0.1\n[grid]\neta = 1\n")


def test_b_and_local_field_are_exclusive():
    with pytest.raises(lf.ConfigError, match="mutually exclusive"):
        lf.parse_config("""
            [pulse]
            rabi = 1.0
            duration = 1.0
            [medium]
            b = 0.1
            local_field = 0.2
            [grid]
            eta = 1.0
        """)


def test_missing_required_keys():
    with pytest.raises(lf.ConfigError, match="pulse.rabi"):
        lf.parse_config("[medium]\nb = 0.1\n[grid]\neta = 1.0\n")
    with pytest.raises(lf.ConfigError, match="medium.b"):
        lf.parse_config("[pulse]\nrabi = 1.0\nduration = 1.0\n[grid]\neta = 1.0\n")


def test_normalization_values_restricted():
    with pytest.raises(lf.ConfigError, match="normalization"):
        OutputSpec(normalization="percent")


def test_manifest_covers_every_consumed_parameter():
    cfg = lf.preset_config("fig2a")
    manifest = cfg.manifest()
    expected_keys = {
        "name",
        "pulse.rabi", "pulse.duration", "pulse.detuning", "pulse.area",
        "medium.local_field", "medium.b", "medium.gamma", "medium.gamma2",
        "grid.nu_min", "grid.nu_max", "grid.n_modes", "grid.eta",
        "grid.kappa", "grid.intensity_scale",
        "numerics.dt", "numerics.t_end", "numerics.detection_time",
        "numerics.truncation_order",
        "output.normalization",
    }
    assert expected_keys <= set(manifest)
    assert manifest["medium.b"] == pytest.approx(0.32)
    assert manifest["numerics.detection_time"] == cfg.pulse.duration
    # nothing volatile sneaks in
    assert "threads" not in " ".join(manifest)


def test_resolved_numerics_defaults():
    cfg = lf.preset_config("fig2a")
    assert cfg.resolved_detection_time() == cfg.pulse.duration
    assert cfg.resolved_t_end() == cfg.pulse.duration
    assert cfg.resolved_dt() <= lf.resolution_limit_dt(cfg.pulse)
    assert cfg.resolved_truncation() == lf.default_truncation(0.32)
