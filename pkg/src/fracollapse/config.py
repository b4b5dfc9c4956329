"""INI run configuration with a fixed schema; unknown sections or keys are errors."""

from __future__ import annotations

import configparser
import itertools
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _paths(text: str) -> tuple:
    return tuple(v.strip() for v in text.split(",") if v.strip())


SCHEMA = {
    "model": {"s": float, "dim": int, "p": float, "p1": float, "p2": float, "lambda1": float, "lambda2": float},
    "grid": {"n": int, "half_length": float},
    "solver": {"tol": float, "max_iter": int, "width": float, "amplitude": float, "symmetrize_every": int},
    "sim": {
        "dt": float, "t_end": float, "snapshot_every": int, "diag_every": int,
        "stop_gradient_factor": float, "stop_mass_drift": float, "adapt": _bool,
        "adapt_growth": float, "dt_min": float, "seed": int,
    },
    "data": {
        "kind": str, "amplitude": float, "width": float, "radius": float, "chirp": float,
        "c": float, "rho": float, "rho_over_threshold": float, "count": int,
        "path": str, "ground_state": str,
    },
    "diagnostics": {
        "virial_R": float, "conc_delta": float, "plots": _bool, "resolved_tol": float, "rate_window": float,
    },
    "classify": {"ground_states": _paths, "case3_constant": float, "family_tol": float, "solve_missing": _bool},
    "sweep": None,  # keys are "section.key", values comma-separated
}

DATA_KINDS = ("gaussian", "ring", "random", "scaled_ground_state", "snapshot")


@dataclass
class RunConfig:
    sections: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    source: str = ""

    def has(self, section: str) -> bool:
        return section in self.sections

    def require(self, *sections: str):
        for sec in sections:
            if sec not in self.sections:
                raise ConfigError(f"{self.source or 'config'}: missing [{sec}] section")

    def get(self, section: str, key: str, default=None):
        return self.sections.get(section, {}).get(key, default)

    def need(self, section: str, key: str):
        val = self.get(section, key)
        if val is None:
            raise ConfigError(f"{self.source or 'config'}: [{section}] needs '{key}'")
        return val

    def with_overrides(self, overrides: dict) -> "RunConfig":
        secs = {k: dict(v) for k, v in self.sections.items()}
        for dotted, val in overrides.items():
            sec, key = dotted.split(".", 1)
            secs.setdefault(sec, {})[key] = val
        return RunConfig(secs, {}, self.source)

    def sweep_points(self) -> list:
        """Cartesian product of the [sweep] value lists, as override dicts."""
        if not self.sweep:
            return []
        keys = sorted(self.sweep)
        return [dict(zip(keys, combo)) for combo in itertools.product(*(self.sweep[k] for k in keys))]

    def echo(self) -> dict:
        out = {}
        for sec in sorted(self.sections):
            for key in sorted(self.sections[sec]):
                val = self.sections[sec][key]
                if isinstance(val, tuple):
                    val = ",".join(str(v) for v in val)
                out[f"{sec}.{key}"] = str(val)
        for key in sorted(self.sweep):
            out[f"sweep.{key}"] = ",".join(repr(v) for v in self.sweep[key])
        return out


def _convert(section: str, key: str, raw: str, source: str):
    table = SCHEMA[section]
    if key not in table:
        raise ConfigError(f"{source}: unknown key '{key}' in [{section}]")
    try:
        return table[key](raw)
    except ValueError as exc:
        raise ConfigError(f"{source}: [{section}] {key} = {raw!r}: {exc}") from None


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    sections, sweep = {}, {}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"{source}: unknown section [{sec}]")
        if sec == "sweep":
            for key, raw in cp.items(sec):
                target, _, name = key.partition(".")
                if target not in SCHEMA or SCHEMA[target] is None or not name:
                    raise ConfigError(f"{source}: sweep key '{key}' must be section.key")
                values = tuple(_convert(target, name, v.strip(), source) for v in raw.split(",") if v.strip())
                if not values:
                    raise ConfigError(f"{source}: sweep key '{key}' has no values")
                sweep[key] = values
            continue
        sections[sec] = {key: _convert(sec, key, raw, source) for key, raw in cp.items(sec)}
    kind = sections.get("data", {}).get("kind")
    if kind is not None and kind not in DATA_KINDS:
        raise ConfigError(f"{source}: [data] kind must be one of {', '.join(DATA_KINDS)}")
    return RunConfig(sections, sweep, source)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, str(path))


def write_manifest(path, entries: dict) -> Path:
    path = Path(path)
    lines = []
    for key, val in entries.items():
        sval = str(val)
        if "\n" in sval or "=" in key:
            raise ValueError(f"manifest entry {key!r} is not single-line key=value")
        lines.append(f"{key}={sval}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_manifest(path) -> dict:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}: malformed manifest line {line!r}")
        out[key] = val
    return out
