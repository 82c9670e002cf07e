"""Declarative experiment configuration.

Configs are line-oriented `key = value` files with `[section]` headers,
parsed by configparser against a strict schema: unknown sections or keys
are errors, every value is typed, and serialization round-trips bit-exactly
(floats are written with repr, which is read back to the identical double).
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass

from .errors import ConfigurationError

EXPERIMENT_KINDS = (
    "greens-verify",
    "decay-linear",
    "decay-nonlinear",
    "mach-sweep",
    "energy-check",
    "lp-selftest",
)


def _parse_bool(s):
    v = str(s).strip().lower()
    if v in ("1", "true", "on", "yes"):
        return True
    if v in ("0", "false", "off", "no"):
        return False
    raise ConfigurationError(f"expected a boolean, got {s!r}")


def _parse_float_list(s):
    if isinstance(s, (list, tuple)):
        return [float(x) for x in s]
    parts = [p.strip() for p in str(s).split(",") if p.strip()]
    return [float(p) for p in parts]


def _fmt(v):
    if isinstance(v, bool):
        return "on" if v else "off"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ", ".join(repr(float(x)) for x in v)
    return str(v)


# (type parser, default) per section/key; None default means required.
SCHEMA = {
    "experiment": {
        "kind": (str, None),
        "seed": (int, 0),
        "threads": (int, 0),
    },
    "grid": {
        "d": (int, 2),
        "n": (int, 64),
        "l": (float, 2.0 * math.pi),
    },
    "fluid": {
        "mu": (float, 0.75),
        "lambda": (float, 2.0),
        "gamma": (float, 1.4),
        "a_const": (float, 1.0),
        "delta_vac": (float, 1e-3),
    },
    "initial-data": {
        "profile": (str, "mixed"),
        "amplitude": (float, 1e-2),
        "vortical_weight": (float, 1.0),
        "acoustic_weight": (float, 0.1),
        "density_weight": (float, 0.5),
    },
    "time": {
        "dt": (float, 1e-2),
        "t_end": (float, 50.0),
        "snapshot_every": (int, 100),
        "scheme": (str, "splitstep"),
        "dealias": (_parse_bool, True),
        "cfl_safety": (float, 0.4),
    },
    "decay": {
        "dimension": (int, 3),
        "sigma0": (float, -1.5),
        "sigmas": (_parse_float_list, [-1.0, 0.0, 1.0, 1.5]),
        "t_start": (float, 1.0),
        "t_stop": (float, 1.0e4),
        "num_times": (int, 30),
        "fit_t_min": (float, 10.0),
        "uv_cutoff": (float, 2.0),
        "slope_tol": (float, 0.05),
        "band_max_ratio": (float, 10.0),
    },
    "greens": {
        "mu": (float, 1.0),
        "lambda": (float, 0.0),
        "gamma": (float, 1.0),
        "t_max": (float, 100.0),
        "oracle_tol": (float, 1e-9),
    },
    "mach": {
        "eps_list": (_parse_float_list, [0.25, 0.0625, 0.015625]),
        "p_reference": (float, 4.0),
    },
    "lp": {
        "k0": (int, 4),
    },
    "output": {
        "dir": (str, "out"),
    },
}

SECTION_ORDER = list(SCHEMA.keys())

# Per-kind overrides applied on top of the schema defaults.
KIND_DEFAULTS = {
    "greens-verify": {},
    "decay-linear": {},
    "decay-nonlinear": {
        "fluid": {"mu": 0.75, "lambda": 2.0, "gamma": 1.4},
        "initial-data": {"amplitude": 1e-2},
        "time": {"dt": 1e-2, "t_end": 50.0, "snapshot_every": 100},
    },
    "mach-sweep": {
        "fluid": {"mu": 0.05, "lambda": 28.9, "gamma": 14.0},
        "initial-data": {
            "amplitude": 0.5,
            "vortical_weight": 1.0,
            "acoustic_weight": 0.6,
            "density_weight": 0.2,
        },
        "time": {"dt": 5e-4, "t_end": 1.0, "snapshot_every": 10**6},
    },
    "energy-check": {
        "fluid": {"mu": 0.75, "lambda": 2.0, "gamma": 1.4},
        "initial-data": {"amplitude": 1e-2},
        "time": {"dt": 1e-2, "t_end": 10.0, "snapshot_every": 50},
    },
    "lp-selftest": {},
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Typed view over the validated section/key table."""

    values: tuple  # nested ((section, ((key, value), ...)), ...) for hashability

    @property
    def table(self):
        return {s: dict(kv) for s, kv in self.values}

    def get(self, section, key):
        return self.table[section][key]

    @property
    def kind(self):
        return self.get("experiment", "kind")

    def __getitem__(self, section):
        return self.table[section]

    def serialize(self):
        """Canonical ini text; parsing it reproduces this config exactly."""
        tab = self.table
        out = io.StringIO()
        for sec in SECTION_ORDER:
            out.write(f"[{sec}]\n")
            for key in SCHEMA[sec]:
                out.write(f"{key} = {_fmt(tab[sec][key])}\n")
            out.write("\n")
        return out.getvalue()


def default_config(kind, **overrides) -> ExperimentConfig:
    """Built-in config for an experiment kind; overrides are (section, key) pairs."""
    if kind not in EXPERIMENT_KINDS:
        raise ConfigurationError(f"unknown experiment kind {kind!r}")
    tab = {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}
    tab["experiment"]["kind"] = kind
    for sec, kv in KIND_DEFAULTS.get(kind, {}).items():
        tab[sec].update(kv)
    for (sec, key), v in overrides.items():
        if sec not in SCHEMA or key not in SCHEMA[sec]:
            raise ConfigurationError(f"unknown config entry [{sec}] {key}")
        tab[sec][key] = v
    return _finalize(tab)


def parse_config(text, kind=None) -> ExperimentConfig:
    """Parse ini text against the schema; unknown keys are errors."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"config parse error: {exc}") from exc
    raw_kind = kind
    if cp.has_option("experiment", "kind"):
        raw_kind = cp.get("experiment", "kind").strip()
    if raw_kind is None:
        raise ConfigurationError("config must declare [experiment] kind = ...")
    base = default_config(raw_kind).table
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigurationError(f"unknown config section [{sec}]")
        for key, value in cp.items(sec):
            if key not in SCHEMA[sec]:
                raise ConfigurationError(f"unknown key {key!r} in section [{sec}]")
            parser, _ = SCHEMA[sec][key]
            try:
                base[sec][key] = parser(value)
            except (ValueError, TypeError) as exc:
                raise ConfigurationError(
                    f"bad value for [{sec}] {key}: {value!r} ({exc})"
                ) from exc
    if kind is not None and base["experiment"]["kind"] != kind:
        raise ConfigurationError(
            f"config kind {base['experiment']['kind']!r} does not match requested {kind!r}"
        )
    return _finalize(base)


def load_config(path, kind=None) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), kind=kind)


def _finalize(tab) -> ExperimentConfig:
    _validate(tab)
    frozen = tuple(
        (sec, tuple((k, _freeze(tab[sec][k])) for k in SCHEMA[sec])) for sec in SECTION_ORDER
    )
    return ExperimentConfig(frozen)


def _freeze(v):
    return tuple(v) if isinstance(v, list) else v


def _validate(tab):
    kind = tab["experiment"]["kind"]
    if kind not in EXPERIMENT_KINDS:
        raise ConfigurationError(f"unknown experiment kind {kind!r}")
    g = tab["grid"]
    if g["d"] not in (2, 3):
        raise ConfigurationError("grid d must be 2 or 3")
    if g["n"] < 8 or g["n"] % 2:
        raise ConfigurationError("grid n must be even and >= 8")
    if not g["l"] > 0:
        raise ConfigurationError("grid l must be positive")
    f = tab["fluid"]
    if not f["mu"] > 0 or not 2 * f["mu"] + f["lambda"] > 0:
        raise ConfigurationError("fluid viscosities must satisfy mu > 0, 2 mu + lambda > 0")
    if not f["gamma"] > 1:
        raise ConfigurationError("fluid gamma must exceed 1")
    if not f["a_const"] > 0:
        raise ConfigurationError("pressure constant must be positive")
    t = tab["time"]
    if not t["dt"] > 0 or not t["t_end"] > 0 or t["snapshot_every"] < 1:
        raise ConfigurationError("time section needs dt > 0, t_end > 0, snapshot_every >= 1")
    if t["scheme"] not in ("splitstep", "imex-euler"):
        raise ConfigurationError(f"unknown scheme {t['scheme']!r}")
    d = tab["decay"]
    dd = d["dimension"]
    if dd < 3:
        raise ConfigurationError("decay experiments need dimension >= 3")
    if not (-dd / 2.0 <= d["sigma0"] < dd / 2.0 - 2.0):
        raise ConfigurationError(
            f"sigma0 = {d['sigma0']} outside [-d/2, d/2 - 2) for d = {dd}"
        )
    for s in d["sigmas"]:
        if not (d["sigma0"] < s <= dd / 2.0):
            raise ConfigurationError(
                f"decay sigma = {s} outside (sigma0, d/2] = ({d['sigma0']}, {dd / 2.0}]"
            )
    if not 1.0 <= d["t_start"] < d["t_stop"]:
        raise ConfigurationError("decay needs 1 <= t_start < t_stop")
    gr = tab["greens"]
    if not gr["mu"] > 0 or not 2 * gr["mu"] + gr["lambda"] > 0 or not gr["gamma"] > 0:
        raise ConfigurationError("greens section violates mu > 0, 2 mu + lambda > 0, gamma > 0")
    m = tab["mach"]
    if not m["eps_list"]:
        raise ConfigurationError("mach eps_list must be nonempty")
    for e in m["eps_list"]:
        if not 0 < e <= 1:
            raise ConfigurationError(f"Mach number {e} outside (0, 1]")
    if any(a <= b for a, b in zip(m["eps_list"], m["eps_list"][1:])):
        raise ConfigurationError("mach eps_list must be strictly decreasing")
    if not m["p_reference"] > 2:
        raise ConfigurationError("mach p_reference must exceed 2")
    idat = tab["initial-data"]
    if idat["profile"] not in ("mixed", "taylor-green", "traveling-acoustic", "random-band", "zero"):
        raise ConfigurationError(f"unknown profile {idat['profile']!r}")
    if tab["lp"]["k0"] < 0:
        raise ConfigurationError("lp k0 must be a nonnegative integer")
