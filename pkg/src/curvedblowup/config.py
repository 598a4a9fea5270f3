"""Sectioned ``key = value`` run configuration with strict keys."""
from __future__ import annotations

import configparser
import io
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

log = logging.getLogger(__name__)

OUTPUT_ROOT_ENV = "CURVEDBLOWUP_OUTPUT_ROOT"

STAGES = ("metric", "profile", "residual", "spectral", "evolve", "rate")
REQUIRES = {"residual": "profile", "evolve": "profile", "rate": "evolve"}


class ConfigError(ValueError):
    pass


# section -> key -> (type, default)
SCHEMA: Dict[str, Dict[str, tuple]] = {
    "run": {
        "stages": (str, "metric,profile,residual,spectral,evolve,rate"),
        "deterministic": (bool, True),
    },
    "metric": {
        "name": (str, "sphere"),
        "r0": (float, 0.5),
        "profile": (str, ""),
    },
    "model": {
        "nu": (float, 0.75),
        "t0": (float, 0.2),
        "t_min": (float, 0.0125),
    },
    "grid": {
        "t_nodes": (int, 24),
        "a_nodes": (int, 160),
        "interior_nodes": (int, 81),
        "eps_a": (float, 1e-3),
        "R_points": (int, 6001),
        "r_points": (int, 4096),
    },
    "renorm": {
        "rounds": (int, 1),
        "even": (bool, True),
        "p": (int, 0),
        "window_lo": (float, 50.0),
        "window_hi": (float, 3000.0),
    },
    "evolve": {
        "t0": (float, 0.1),
        "t_target": (float, 0.0125),
        "cfl": (float, 0.5),
        "nonlinear": (bool, True),
        "tune": (bool, True),
        "delta": (float, 0.0),
        "record_every": (int, 10),
    },
    "tolerances": {
        "rate_band": (float, 0.25),
        "resolution_guard": (float, 0.05),
        "blowup_factor": (float, 1e3),
        "exterior_growth": (float, 2.0),
        "bisection_band": (float, 0.1),
    },
    "output": {
        "directory": (str, "out"),
    },
}

POSITIVE = {("tolerances", k) for k in SCHEMA["tolerances"]} | {
    ("metric", "r0"), ("model", "t0"), ("model", "t_min"), ("grid", "eps_a"),
    ("evolve", "t0"), ("evolve", "t_target"), ("evolve", "cfl"),
}


def _convert(kind, text: str, where: str):
    try:
        if kind is bool:
            low = text.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        return kind(text.strip())
    except ValueError as exc:
        raise ConfigError(f"{where}: cannot read {text!r} as {kind.__name__}") from exc


@dataclass
class RunConfig:
    values: Dict[str, Dict[str, object]] = field(default_factory=dict)

    def __post_init__(self):
        base = {s: {k: d for k, (_, d) in keys.items()} for s, keys in SCHEMA.items()}
        for s, kv in self.values.items():
            base[s].update(kv)
        self.values = base

    def __getitem__(self, key: str):
        section, name = key.split(".", 1)
        return self.values[section][name]

    def set(self, key: str, text) -> None:
        section, _, name = key.partition(".")
        if section not in SCHEMA or name not in SCHEMA[section]:
            raise ConfigError(f"unknown key {key!r}")
        kind = SCHEMA[section][name][0]
        self.values[section][name] = _convert(kind, str(text), key) if isinstance(text, str) else kind(text)

    @property
    def stages(self):
        return [s.strip() for s in str(self["run.stages"]).split(",") if s.strip()]

    @property
    def output_dir(self) -> Path:
        d = Path(str(self["output.directory"]))
        root = os.environ.get(OUTPUT_ROOT_ENV)
        if root and not d.is_absolute():
            d = Path(root) / d
        return d

    def validate(self) -> "RunConfig":
        nu = self["model.nu"]
        if not 0.0 < nu <= 1.0:
            raise ConfigError(f"nu={nu} outside (0, 1]")
        if not 0.5 < nu <= 1.0:
            log.warning("nu=%g outside (1/2, 1]: the blow-up statement does not cover it", nu)
        for s, k in POSITIVE:
            if not self.values[s][k] > 0:
                raise ConfigError(f"{s}.{k} must be positive")
        if self["evolve.delta"] < 0:
            raise ConfigError("evolve.delta must be non-negative (0 disables the check)")
        if not self["model.t_min"] < self["model.t0"]:
            raise ConfigError("model.t_min must be below model.t0")
        if not self["evolve.t_target"] < self["evolve.t0"]:
            raise ConfigError("evolve.t_target must be below evolve.t0")
        if self["metric.name"] == "custom" and not self["metric.profile"]:
            raise ConfigError("custom metric needs metric.profile")
        if not self["run.deterministic"]:
            raise ConfigError("run.deterministic is fixed to true")
        stages = self.stages
        for s in stages:
            if s not in STAGES:
                raise ConfigError(f"unknown stage {s!r}")
        # a missing upstream stage is allowed (its artifact is read from disk),
        # a misordered one is not
        for s in stages:
            need = REQUIRES.get(s)
            if need in stages and stages.index(need) > stages.index(s):
                raise ConfigError(f"stage {s!r} must come after {need!r}")
        return self

    def dumps(self) -> str:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        for s in SCHEMA:
            parser[s] = {k: _format(v) for k, v in self.values[s].items()}
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()


def _format(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def loads(text: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    values: Dict[str, Dict[str, object]] = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser[section].items():
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}")
            values.setdefault(section, {})[key] = _convert(SCHEMA[section][key][0], raw,
                                                           f"{section}.{key}")
    return RunConfig(values)


def load(path: Optional[str]) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return loads(text)
