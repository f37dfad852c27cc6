"""Run configuration: INI-style sections of typed key = value pairs."""
from __future__ import annotations

import configparser
import dataclasses
import math

from .params import ParamError, SetupParams


class ConfigError(ValueError):
    pass


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s):
    return tuple(float(x) for x in s.split(",") if x.strip())


def _words(s):
    return tuple(x.strip() for x in s.split(",") if x.strip())


def _choice(*opts):
    def conv(s):
        s = s.strip()
        if s not in opts:
            raise ValueError(f"expected one of {', '.join(opts)}, got {s!r}")
        return s
    conv.__name__ = "choice"
    return conv


def _models(s):
    out = _words(s)
    for m in out:
        _choice("eom", "lindblad_micro", "lindblad_phen")(m)
    return out


_P = SetupParams()
PARAM_KEYS = {("lambda" if f.name == "lam" else f.name): f.name for f in dataclasses.fields(SetupParams)}

SCHEMA = {
    "params": {k: (_bool if k == "lamb_shift" else float, getattr(_P, v)) for k, v in PARAM_KEYS.items()},
    "dqd": {
        "tune": (_choice("none", "nearest"), "none"),
    },
    "balance": {
        "n_theta": (int, 200),
        "margin": (float, 1e-3),
        "eps_resolution": (float, 1e-4),
        "sensitivity_gamma_b": (_floats, (0.0, 2.5e-3, 5e-3, 7.5e-3, 1e-2)),
    },
    "evolve": {
        "t_max": (float, 1600.0),
        "n_times": (int, 2000),
        "alpha1": (complex, 1 + 0j),
        "alpha2": (complex, 0j),
        "e0": (float, 0.0),
        "detuning": (float, 0.0),
        "method": (_choice("eigenbasis", "quadrature"), "eigenbasis"),
        "photon_bound": (float, 50.0),
        "at_ep": (_bool, False),
        "noise": (_bool, True),
    },
    "transmission": {
        "axis": (_choice("lambda", "kappa2"), "lambda"),
        "axis_min": (float, 0.0),
        "axis_max": (float, 0.004),
        "axis_n": (int, 81),
        "detuning_min": (float, -0.008),
        "detuning_max": (float, 0.008),
        "detuning_n": (int, 321),
    },
    "steady": {
        "axis": (_choice("lambda", "kappa2"), "lambda"),
        "axis_min": (float, 0.0),
        "axis_max": (float, 0.004),
        "axis_n": (int, 41),
        "models": (_models, ("eom", "lindblad_micro", "lindblad_phen")),
    },
    "compare": {
        "t_max": (float, 1600.0),
        "n_times": (int, 401),
        "alpha1": (complex, 1 + 0j),
        "method": (_choice("eigenbasis", "quadrature"), "eigenbasis"),
        "kappa2_min": (float, 0.0),
        "kappa2_max": (float, 0.010),
        "kappa2_n": (int, 201),
        "lambda_sweep": (float, 0.002),
    },
}


@dataclasses.dataclass
class RunConfig:
    params: SetupParams
    sections: dict  # section -> {key: value}, defaults filled in
    raw_params: dict

    def __getitem__(self, section):
        return self.sections[section]

    def echo(self):
        """Resolved configuration as 'section.key = value' lines (deterministic order)."""
        lines = []
        for name in SCHEMA:
            for k in SCHEMA[name]:
                v = self.raw_params[k] if name == "params" else self.sections[name][k]
                lines.append(f"[{name}] {k} = {_fmt(v)}")
        return lines


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, complex):
        return f"{v.real!r}{v.imag:+}j"
    if isinstance(v, tuple):
        return ",".join(_fmt(x) for x in v)
    return str(v)


def _line_of(text, section, key):
    cur = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            cur = s[1:-1].strip()
            if key is None and cur == section:
                return i
        elif cur == section and s.split("=", 1)[0].strip() == key:
            return i
    return None


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, strict=True, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(str(e).replace("\n", " ")) from None
    sections = {}
    for name in cp.sections():
        if name not in SCHEMA:
            raise ConfigError(f"unknown section [{name}] (line {_line_of(text, name, None) or '?'})")
    for name, keys in SCHEMA.items():
        vals = {k: d for k, (_, d) in keys.items()}
        if cp.has_section(name):
            for k, s in cp.items(name):
                if k not in keys:
                    raise ConfigError(f"line {_line_of(text, name, k)}: unknown key '{k}' in [{name}]")
                conv = keys[k][0]
                try:
                    v = conv(s)
                except ValueError as e:
                    raise ConfigError(f"line {_line_of(text, name, k)}: bad value for [{name}] {k}: {e}") from None
                if isinstance(v, float) and not math.isfinite(v):
                    raise ConfigError(f"line {_line_of(text, name, k)}: [{name}] {k} must be finite")
                vals[k] = v
        sections[name] = vals
    raw = dict(sections.pop("params"))
    if overrides:
        raw.update(overrides)
    # omega_max / omega_cut follow omega_c / omega0 unless set explicitly
    given = set(cp.options("params")) if cp.has_section("params") else set()
    for key, base, fac in (("omega_max", "omega_c", 10.0), ("omega_cut", "omega0", 100.0)):
        if key not in given:
            raw[key] = fac * raw[base]
    try:
        p = SetupParams(**{PARAM_KEYS[k]: v for k, v in raw.items()})
    except ParamError as e:
        raise ConfigError(f"invalid parameters: {e}") from None
    for name, sec in sections.items():
        for k, v in sec.items():
            if k.endswith("_n") or k in ("n_theta", "n_times"):
                if v < 2:
                    raise ConfigError(f"[{name}] {k} must be >= 2")
    return RunConfig(p, sections, raw)


def load_config(path, overrides=None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from None
    return parse_config(text, overrides)
