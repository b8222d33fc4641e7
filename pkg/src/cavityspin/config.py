"""Experiment configuration: parameter sets, defaults and the INI loader.

Every default is the value reported for the 171Yb cavity experiment. Config
files carry frequencies in Hz (key suffix ``_hz``); the dataclasses hold
angular frequencies in rad/s, times in s and lengths in m.
"""
from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError

TWO_PI = 2.0 * math.pi

MODELS = ("paper_empirical", "saturating")


def _require(ok, key, message):
    if not ok:
        raise ConfigError(key, message)


@dataclass(frozen=True)
class AtomSpecies:
    gamma: float = TWO_PI * 182e3
    wavelength: float = 556e-9
    hyperfine: float = TWO_PI * 5.9e9
    g_f: float = 1.0
    m_f: float = -1.5

    def __post_init__(self):
        _require(self.gamma > 0, "atom.gamma_hz", "must be > 0")
        _require(self.wavelength > 0, "atom.wavelength", "must be > 0")
        _require(self.hyperfine > self.gamma, "atom.hyperfine_hz", "must exceed gamma")
        _require(abs(self.m_f) <= 1.5, "atom.m_f", "|m_f| must be <= 3/2")


@dataclass(frozen=True)
class CavitySpec:
    length: float = 150e-6
    waist: float = 19e-6
    transmittance: float = 2.5e-5
    loss: float = 3e-6
    reflectivity: float = 0.999972
    kappa: float = TWO_PI * 4.5e6
    g_max: float = TWO_PI * 2.8e6

    def __post_init__(self):
        total = self.reflectivity + self.transmittance + self.loss
        _require(abs(total - 1.0) <= 1e-6, "cavity.reflectivity",
                 f"R+T+L must equal 1 within 1e-6 (got {total:.9f})")
        _require(self.kappa > 0, "cavity.kappa_hz", "must be > 0")
        _require(self.g_max > 0, "cavity.g_max_hz", "must be > 0")
        _require(0 < self.waist < self.length, "cavity.waist", "must satisfy 0 < waist < length")


@dataclass(frozen=True)
class DriveSpec:
    p_total: float = 0.9e-6
    p_ref: float = 0.9e-6
    omega_ref: float = TWO_PI * 2.4e6
    waist: float = 24e-6
    laser_detuning: float = 0.0

    def __post_init__(self):
        _require(self.p_total >= 0, "drive.p_total_w", "must be >= 0")
        _require(self.p_ref > 0, "drive.p_ref_w", "must be > 0")
        _require(self.omega_ref > 0, "drive.omega_ref_hz", "must be > 0")
        _require(self.waist > 0, "drive.waist", "must be > 0")
        # only omega_l = omega_a = omega_c is modeled
        _require(self.laser_detuning == 0.0, "drive.laser_detuning_hz",
                 "nonzero detuning is not supported")


@dataclass(frozen=True)
class FieldSpec:
    b_gauss: float = 34.0
    delta: float = TWO_PI * 71e6

    def __post_init__(self):
        _require(self.b_gauss >= 0, "field.b_gauss", "must be >= 0")
        _require(self.delta >= 0, "field.delta_hz", "must be >= 0")


@dataclass(frozen=True)
class DetectionSpec:
    q: float = 0.3
    n_det: int = 2
    r_dark: float = 200.0
    tau_dead: float = 100e-9
    t_coin: float = 600e-9
    t_win: float = 36e-6
    t_gap: float = 6e-6
    t_pulse: float = 2e-6
    t_meas: float = 30e-6
    t_hold: float = 3e-3
    # rate calibration factor; default is the output of calibrate_eta0_zeta
    # on the default configuration
    zeta: float = 0.215
    pol_error: float = 0.0

    def __post_init__(self):
        _require(0 < self.q <= 1, "detection.q", "must satisfy 0 < q <= 1")
        _require(self.n_det >= 1, "detection.n_det", "must be >= 1")
        _require(self.r_dark >= 0, "detection.r_dark", "must be >= 0")
        _require(self.tau_dead >= 0, "detection.tau_dead", "must be >= 0")
        for name in ("t_coin", "t_win", "t_gap", "t_pulse", "t_meas", "t_hold"):
            _require(getattr(self, name) > 0, f"detection.{name}", "must be > 0")
        _require(self.t_gap + self.t_meas <= self.t_win * (1 + 1e-12), "detection.t_meas",
                 "t_gap + t_meas must not exceed t_win")
        _require(PULSE_OFFSET + self.t_pulse <= self.t_gap * (1 + 1e-12), "detection.t_pulse",
                 "preparation pulse must fit inside the beam-off gap")
        _require(0 < self.zeta <= 1, "detection.zeta", "must satisfy 0 < zeta <= 1")
        _require(0 <= self.pol_error <= 1, "detection.pol_error", "must lie in [0, 1]")


# pulse starts this long after the coincidence, inside the beam-off gap
PULSE_OFFSET = 2e-6


@dataclass(frozen=True)
class SourceSpec:
    drop_height: float = 7e-3
    flux: float = 1e3
    v_fall: float = 0.3
    v_spread: float = 4e-2
    t_transit: float = 120e-6
    src_halfwidth: float = 57e-6

    def __post_init__(self):
        for f in dataclasses.fields(self):
            _require(getattr(self, f.name) > 0, f"source.{f.name}", "must be > 0")
        _require(self.flux * self.t_transit < 1, "source.flux",
                 "flux * t_transit must be < 1 (dilute regime)")


@dataclass(frozen=True)
class SimSpec:
    trials: int = 100
    drops: int = 200
    seed: int = 20100
    model: str = "paper_empirical"
    bin_ns: int = 2000
    threads: int = 1

    def __post_init__(self):
        _require(self.trials >= 1, "sim.trials", "must be >= 1")
        _require(self.drops >= 1, "sim.drops", "must be >= 1")
        _require(0 <= self.seed < 2**64, "sim.seed", "must be an unsigned 64-bit integer")
        _require(self.model in MODELS, "sim.model", f"must be one of {MODELS}")
        _require(self.bin_ns >= 1, "sim.bin_ns", "must be >= 1")
        _require(self.threads >= 1, "sim.threads", "must be >= 1")


@dataclass(frozen=True)
class ExperimentConfig:
    atom: AtomSpecies = dataclasses.field(default_factory=AtomSpecies)
    cavity: CavitySpec = dataclasses.field(default_factory=CavitySpec)
    drive: DriveSpec = dataclasses.field(default_factory=DriveSpec)
    field: FieldSpec = dataclasses.field(default_factory=FieldSpec)
    detection: DetectionSpec = dataclasses.field(default_factory=DetectionSpec)
    source: SourceSpec = dataclasses.field(default_factory=SourceSpec)
    sim: SimSpec = dataclasses.field(default_factory=SimSpec)

    def to_dict(self):
        """Nested dict in config-file units (Hz for frequencies)."""
        out = {}
        for section in SECTIONS:
            spec = getattr(self, section)
            values = {}
            for f in dataclasses.fields(spec):
                key, angular = _file_key(section, f.name)
                value = getattr(spec, f.name)
                values[key] = value / TWO_PI if angular else value
            out[section] = values
        return out

    def replace(self, **sections):
        """Copy with whole sections swapped, e.g. ``replace(drive=new_drive)``."""
        return dataclasses.replace(self, **sections)

    def with_values(self, **dotted):
        """Copy with individual fields changed: ``with_values(detection__zeta=0.2)``.

        Values are in internal units (angular frequencies, seconds).
        """
        grouped = {}
        for name, value in dotted.items():
            section, attr = name.split("__", 1)
            grouped.setdefault(section, {})[attr] = value
        changes = {s: dataclasses.replace(getattr(self, s), **kv) for s, kv in grouped.items()}
        return dataclasses.replace(self, **changes)

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


SECTIONS = ("atom", "cavity", "drive", "field", "detection", "source", "sim")
_SECTION_TYPES = {
    "atom": AtomSpecies, "cavity": CavitySpec, "drive": DriveSpec, "field": FieldSpec,
    "detection": DetectionSpec, "source": SourceSpec, "sim": SimSpec,
}
# fields stored as angular frequency, carried in files as Hz with a _hz suffix
_ANGULAR = {
    "atom": {"gamma", "hyperfine"},
    "cavity": {"kappa", "g_max"},
    "drive": {"omega_ref", "laser_detuning"},
    "field": {"delta"},
}
# file keys that differ from the field name for reasons other than Hz
_RENAMES = {("drive", "p_total"): "p_total_w", ("drive", "p_ref"): "p_ref_w"}


def _file_key(section, name):
    if name in _ANGULAR.get(section, ()):
        return f"{name}_hz", True
    return _RENAMES.get((section, name), name), False


def _schema(section):
    cls = _SECTION_TYPES[section]
    table = {}
    for f in dataclasses.fields(cls):
        key, angular = _file_key(section, f.name)
        table[key] = (f.name, angular, type(f.default))
    return table


def _parse_value(key, raw, kind):
    raw = raw.strip()
    try:
        if kind is int:
            value = float(raw)
            if value != int(value):
                raise ValueError
            return int(value)
        if kind is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(key, f"cannot parse {raw!r} as {kind.__name__}") from None


def _apply(values, section, key, raw):
    table = _schema(section)
    dotted = f"{section}.{key}"
    if key not in table:
        raise ConfigError(dotted, "unknown key")
    name, angular, kind = table[key]
    value = _parse_value(dotted, str(raw), kind)
    if angular:
        value = TWO_PI * value
    values[section][name] = value


def load_config(path=None, overrides=()):
    """Build an :class:`ExperimentConfig` from an INI file plus overrides.

    Parameters
    ----------
    path : str or Path, optional
        INI file with sections ``[atom]``, ``[cavity]``, ... Missing keys take
        their defaults; an empty or absent file gives the full default config.
    overrides : iterable of str
        ``section.key=value`` strings applied after the file.

    Raises
    ------
    ConfigError
        Unknown section or key, unparsable value, or a violated invariant.
        The message names the offending key.
    """
    values = {s: {} for s in SECTIONS}
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            with open(Path(path)) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(str(path), f"cannot read config: {exc}") from None
        except configparser.Error as exc:
            raise ConfigError(str(path), f"parse error: {exc}") from None
        for section in parser.sections():
            if section not in values:
                raise ConfigError(section, "unknown section")
            for key, raw in parser.items(section):
                _apply(values, section, key, raw)
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(item, "override must look like section.key=value")
        dotted, raw = item.split("=", 1)
        section, key = dotted.strip().split(".", 1)
        if section not in values:
            raise ConfigError(dotted, "unknown section")
        _apply(values, section, key.strip(), raw)
    return ExperimentConfig(**{s: _SECTION_TYPES[s](**values[s]) for s in SECTIONS})


def config_from_dict(data):
    """Inverse of :meth:`ExperimentConfig.to_dict` (used for config echo)."""
    overrides = [f"{s}.{k}={v!r}" if isinstance(v, float) else f"{s}.{k}={v}"
                 for s, kv in data.items() for k, v in kv.items()]
    return load_config(None, overrides)
