"""Run configuration: a flat INI file with one section per module.

Keys not listed in :data:`SCHEMA` are rejected. Serialisation is canonical
(sections and keys in schema order, floats by ``repr``) so that
``dumps(loads(text))`` is a fixed point after one pass.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

SEED_ENV = "SRCKEY_SEED"


class ConfigError(ValueError):
    pass


def _int(text: str) -> int:
    # accept 1e6 style for block lengths
    try:
        return int(text)
    except ValueError:
        val = float(text)
        if not val.is_integer():
            raise ConfigError(f"expected an integer, got {text!r}") from None
        return int(val)


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _optional(parse: Callable) -> Callable:
    return lambda text: None if text.strip() in ("", "none") else parse(text)


def _list(parse: Callable) -> Callable:
    return lambda text: tuple(parse(t) for t in text.split(",") if t.strip())


def _pair(text: str) -> tuple:
    vals = _list(float)(text)
    if len(vals) == 1:
        return (vals[0], vals[0])
    if len(vals) != 2:
        raise ConfigError(f"expected 'lo,hi', got {text!r}")
    return vals


def _fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(_fmt(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


_opt_float = _optional(float)
_opt_str = _optional(str)

# section -> key -> (parser, default)
SCHEMA: dict[str, dict[str, tuple]] = {
    "run": {
        "seed": (_int, 20240601),
        "threads": (_int, 1),
    },
    "params": {
        "n": (_int, 1_000_000),
        "m": (_int, 100_000),
        "mu": (float, 0.05),
        "e": (float, 0.02),
        "eps_src": (float, 0.005),
        "delta": (float, 0.005),
        "eps_prime": (float, 1e-6),
        "eps_m": (float, 0.0),
        "xi": (float, 0.0),
        "alphabet_size": (_int, 2),
        "key_rate": (float, 0.1),
    },
    "probs": {
        "p_omega": (_opt_float, None),
        "p_omega_and_upsilon2": (_opt_float, None),
        "p_omega_im": (_opt_float, None),
        "qber": (_opt_float, None),
    },
    "bounds": {
        "log_t": (_opt_float, None),
        "f_ec": (float, 1.16),
        "eps_sec": (float, 1e-10),
        "hoeffding_base": (str, "2"),
        "imperfect_measurements": (_bool, False),
    },
    "simulate": {
        "source": (str, "perfect"),
        "channel": (str, "identity"),
        "measurement": (str, "perfect"),
        "trials": (_int, 100),
        "streaming": (_bool, False),
    },
    "sampling": {
        "max_total": (_int, 16),
        "sample_sizes": (_list(_int), (2, 3, 4, 5, 6)),
        "deltas": (_list(float), (0.1, 0.2, 0.3)),
    },
    "optimize": {
        "mu_range": (_pair, (0.05, 0.5)),
        "delta_range": (_pair, (1e-4, 0.05)),
        "e_range": (_pair, (0.01, 0.11)),
        "m_ratio_range": (_pair, (0.01, 0.5)),
        "resolution": (_int, 6),
        "n_sweep": (_list(_int), ()),
    },
}


@dataclass
class RunConfig:
    """Parsed configuration; ``values[section][key]`` holds typed values."""

    values: dict = field(default_factory=lambda: {s: {k: d for k, (_, d) in keys.items()}
                                                   for s, keys in SCHEMA.items()})
    command: Optional[str] = None

    def __getitem__(self, section: str) -> dict:
        return self.values[section]

    def set(self, section: str, key: str, value: Any) -> None:
        """Set a value; strings are parsed with the schema parser."""
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown key [{section}] {key}")
        parse = SCHEMA[section][key][0]
        try:
            self.values[section][key] = parse(value) if isinstance(value, str) else value
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"[{section}] {key}: {exc}") from None

    def apply_env(self, environ=os.environ) -> None:
        if SEED_ENV in environ:
            self.set("run", "seed", environ[SEED_ENV])

    def dumps(self) -> str:
        lines = []
        for section, keys in SCHEMA.items():
            lines.append(f"[{section}]")
            lines.extend(f"{k} = {_fmt(self.values[section][k])}".rstrip() for k in keys)
            lines.append("")
        return "\n".join(lines)

    def __eq__(self, other) -> bool:
        return isinstance(other, RunConfig) and self.values == other.values


def loads(text: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    cfg = RunConfig()
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            cfg.set(section, key, raw)
    return cfg


def load(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return loads(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
