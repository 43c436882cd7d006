"""Run configuration: INI-style sections, unit suffixes in every key name.

Example::

    [grating]
    period_um = 1.3
    order = 3
    length_mm = 10.35

    [state]
    phi_deg = 180
    mix = 0.943

Unknown sections or keys are rejected.  ``[pump] wavelength_nm = auto``
solves for the degenerate phase-matching point.
"""
import configparser
import hashlib
import json
from dataclasses import dataclass

import numpy as np


class ConfigError(ValueError):
    pass


# section -> key -> (type, default)
SCHEMA = {
    "dispersion": {"set": (str, "ktp_kato2002"), "file": (str, "")},
    "grating": {"period_um": (float, 1.3), "order": (int, 3), "length_mm": (float, 10.35)},
    "pump": {"wavelength_nm": (str, "auto")},
    "spectrum": {
        "span_ghz": (float, 40.0), "points": (int, 4001),
        "sfg_span_pm": (float, 100.0), "sfg_points": (int, 2001),
        "filter_fwhm_pm": (float, 132.0), "filter_shape": (str, "lorentzian"),
        "duty_error": (float, 0.0),
    },
    "state": {"phi_deg": (float, 180.0), "mix": (float, 1.0)},
    "detection": {
        "rate_hz": (float, 1000.0), "efficiency_r": (float, 1.0), "efficiency_l": (float, 1.0),
        "accidental_rate_hz": (float, 0.0), "dark_rate_hz": (float, 0.0),
        "window_ns": (float, 1.0),
    },
    "hom": {
        "kappa": (float, 1.0), "span_ps": (float, 300.0), "points": (int, 301),
        "grid_points": (int, 8001), "grid_span_ghz": (float, 400.0),
        "pair_rate_hz": (float, 200.0), "duration_s": (float, 15.0),
        "accidental_rate_hz": (float, 0.0),
    },
    "fringes": {"duration_s": (float, 15.0), "points": (int, 37)},
    "tomography": {"duration_s": (float, 10.0), "resamples": (int, 100),
                   "target": (str, "singlet"), "workers": (int, 1)},
    "bell": {"duration_s": (float, 1.4)},
    "brightness": {"pump_power_mw": (float, 1.0)},
    "run": {"seed": (int, 20201), "format": (str, "csv")},
}


@dataclass
class RunConfig:
    values: dict

    def __getitem__(self, key):
        return self.values[key]

    def get(self, section, key):
        return self.values[section][key]

    def to_dict(self):
        return {s: dict(v) for s, v in self.values.items()}

    def hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _convert(section, key, kind, raw):
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} as {kind.__name__}") from None


def _validate(v):
    g = v["grating"]
    if g["period_um"] <= 0 or g["length_mm"] <= 0 or g["order"] < 1:
        raise ConfigError("[grating] period, length must be positive and order >= 1")
    if not 0 <= v["state"]["mix"] <= 1:
        raise ConfigError("[state] mix must lie in [0, 1]")
    if not 0 <= v["hom"]["kappa"] <= 1:
        raise ConfigError("[hom] kappa must lie in [0, 1]")
    d = v["detection"]
    for k in ("efficiency_r", "efficiency_l"):
        if not 0 <= d[k] <= 1:
            raise ConfigError(f"[detection] {k} must lie in [0, 1]")
    if d["rate_hz"] <= 0 or d["window_ns"] <= 0:
        raise ConfigError("[detection] rate and window must be positive")
    for sec in ("hom", "fringes", "tomography", "bell"):
        if v[sec]["duration_s"] <= 0:
            raise ConfigError(f"[{sec}] duration_s must be positive")
    if v["spectrum"]["filter_shape"] not in ("lorentzian", "airy"):
        raise ConfigError("[spectrum] filter_shape must be lorentzian or airy")
    if v["run"]["format"] not in ("csv", "json"):
        raise ConfigError("[run] format must be csv or json")
    if v["tomography"]["resamples"] < 50:
        raise ConfigError("[tomography] resamples must be >= 50")
    wl = v["pump"]["wavelength_nm"]
    if wl != "auto":
        val = _convert("pump", "wavelength_nm", float, wl)
        if not np.isfinite(val) or val <= 0:
            raise ConfigError("[pump] wavelength_nm must be positive or 'auto'")


def load_config(path=None, text=None, overrides=None):
    """Parse and validate a config file (or string); missing keys take defaults."""
    values = {s: {k: d for k, (_, d) in keys.items()} for s, keys in SCHEMA.items()}
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        if path is not None:
            with open(path) as fh:
                parser.read_file(fh)
        elif text is not None:
            parser.read_string(text)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            kind = SCHEMA[section][key][0]
            values[section][key] = _convert(section, key, kind, raw.strip())
    for (section, key), val in (overrides or {}).items():
        values[section][key] = val
    _validate(values)
    return RunConfig(values)
