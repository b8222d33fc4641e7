import math

import pytest

from cavityspin import rates
from cavityspin.config import TWO_PI, ExperimentConfig, config_from_dict, load_config
from cavityspin.errors import ConfigError


def test_empty_file_gives_defaults(tmp_path):
    path = tmp_path / "empty.ini"
    path.write_text("")
    assert load_config(path) == ExperimentConfig()
    assert load_config() == ExperimentConfig()


def test_defaults_match_quoted_values(config):
    assert config.atom.gamma == pytest.approx(TWO_PI * 182e3)
    assert config.cavity.kappa == pytest.approx(TWO_PI * 4.5e6)
    assert config.cavity.g_max == pytest.approx(TWO_PI * 2.8e6)
    assert config.drive.omega_ref == pytest.approx(TWO_PI * 2.4e6)
    assert config.field.delta == pytest.approx(TWO_PI * 71e6)
    assert config.detection.q == 0.3
    assert config.detection.t_win == pytest.approx(36e-6)
    assert config.source.flux == 1e3


def test_frequencies_read_in_hz(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[atom]\ngamma_hz = 200e3\n[field]\ndelta_hz = 60e6\n")
    c = load_config(path)
    assert c.atom.gamma == pytest.approx(TWO_PI * 200e3)
    assert c.field.delta == pytest.approx(TWO_PI * 60e6)


def test_invariant_violation_names_key():
    with pytest.raises(ConfigError, match="detection.q"):
        load_config(None, ["detection.q=1.5"])


def test_unknown_key_and_section_rejected(tmp_path):
    with pytest.raises(ConfigError, match="detection.bogus"):
        load_config(None, ["detection.bogus=1"])
    with pytest.raises(ConfigError, match="nosuch"):
        load_config(None, ["nosuch.q=1"])
    path = tmp_path / "c.ini"
    path.write_text("[laser]\nq = 1\n")
    with pytest.raises(ConfigError, match="laser"):
        load_config(path)
    with pytest.raises(ConfigError):
        load_config(None, ["detection.q"])


def test_unparsable_value():
    with pytest.raises(ConfigError, match="sim.trials"):
        load_config(None, ["sim.trials=1.5"])
    with pytest.raises(ConfigError, match="detection.q"):
        load_config(None, ["detection.q=abc"])


def test_power_override_scales_rabi_by_sqrt2():
    base = load_config()
    c = load_config(None, ["drive.p_total_w=1.8e-6"])
    ratio = rates.rabi_from_power(c.drive.p_total, c.drive) / rates.rabi_from_power(base.drive.p_total, base.drive)
    assert ratio == pytest.approx(math.sqrt(2), rel=1e-12)


def test_timing_invariants():
    with pytest.raises(ConfigError):
        load_config(None, ["detection.t_meas=40e-6"])
    with pytest.raises(ConfigError):
        load_config(None, ["source.flux=1e5"])
    with pytest.raises(ConfigError):
        load_config(None, ["sim.model=quantum"])


def test_dict_round_trip(config):
    c = config.with_values(detection__zeta=0.3, drive__p_total=2.7e-6)
    back = config_from_dict(c.to_dict())
    assert back.digest() == c.digest()
    for section in ("atom", "cavity", "drive", "field", "detection", "source", "sim"):
        for key, value in vars(getattr(c, section)).items():
            assert getattr(getattr(back, section), key) == pytest.approx(value, rel=1e-14)


def test_digest_tracks_values(config):
    assert config.digest() == ExperimentConfig().digest()
    assert config.digest() != config.with_values(sim__seed=1).digest()
