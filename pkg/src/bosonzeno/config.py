"""INI-style run configuration.

Example::

    [run]
    mode = meanfield
    samples = 2000

    [schedule]
    delta = 1
    epsilon0 = 10
    T = 20

    [relaxation]
    gamma_x = 0.01, 0.1, 1
    gamma_z = 0

    [grid]
    N = 1, 10, 100

Grids are comma lists or ``log:start:stop:count`` for logarithmic spacing.
"""
import configparser
import math
import re
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import ConfigError
from .meanfield import CLOSURES, DEFAULT_ATOL, DEFAULT_RTOL, DEFAULT_SAMPLES
from .readout import DEFAULT_TARGET_PE
from .tmin import DEFAULT_REL_PRECISION, DEFAULT_T_HI, DEFAULT_T_LO

MODES = ("discrete", "meanfield", "exact", "readout", "tmin", "sweep")

# section -> key -> kind
SCHEMA = {
    "run": {"mode": "mode", "samples": "int", "rtol": "float", "atol": "float",
            "closure": "closure", "workers": "int"},
    "schedule": {"delta": "float", "epsilon0": "float", "T": "float"},
    "relaxation": {"gamma_x": "float_grid", "gamma_z": "float_grid"},
    "grid": {"N": "int_grid", "n": "int_grid"},
    "readout": {"target_pe": "float"},
    "tmin": {"T_lo": "float", "T_hi": "float", "rel_precision": "float"},
}

_MODE_DEFAULTS = {
    "discrete": {"N": (100,), "n": (1000, 10000, 100000, 1000000, 10000000)},
    "meanfield": {"N": (1, 10, 100), "gamma_x": (0.1,)},
    "exact": {"N": (1, 2, 4), "gamma_x": (0.1,)},
    "readout": {"N": (100, 1000, 10000, 100000, 1000000)},
    "tmin": {"N": (10, 100, 1000, 10000), "gamma_x": (0.1,)},
    "sweep": {"N": (1, 10, 100, 1000), "gamma_x": (0.001, 0.01, 0.1, 1.0, 10.0, 100.0), "T": 10.0},
}


@dataclass(frozen=True)
class Violation:
    key: str
    line: int
    message: str

    def __str__(self):
        where = f"{self.key} (line {self.line})" if self.line else self.key
        return f"{where}: {self.message}"


@dataclass(frozen=True)
class RunConfig:
    mode: str
    delta: float = 1.0
    epsilon0: float = 10.0
    T: float = 20.0
    gamma_x: tuple = (0.0,)
    gamma_z: tuple = (0.0,)
    N: tuple = (1,)
    n: tuple = (1000,)
    target_pe: float = DEFAULT_TARGET_PE
    samples: int = DEFAULT_SAMPLES
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL
    closure: str = "product"
    workers: int = 1
    T_lo: float = DEFAULT_T_LO
    T_hi: float = DEFAULT_T_HI
    rel_precision: float = DEFAULT_REL_PRECISION

    def as_dict(self):
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


def default_config(mode):
    if mode not in MODES:
        raise ConfigError([Violation("run.mode", 0, f"unknown mode {mode!r}; expected one of {MODES}")])
    return replace(RunConfig(mode=mode), **_MODE_DEFAULTS[mode])


def parse_grid(text, integer=False):
    text = text.strip()
    if text.startswith("log:"):
        parts = text[4:].split(":")
        if len(parts) != 3:
            raise ValueError("log grid must be log:start:stop:count")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if start <= 0 or stop <= 0 or count < 1:
            raise ValueError("log grid needs positive start, stop and count")
        values = np.geomspace(start, stop, count) if count > 1 else np.array([start])
        if integer:
            values = np.rint(values)
        values = [float(v) for v in values]
    else:
        values = [float(x) for x in text.split(",") if x.strip()]
    if not values:
        raise ValueError("empty grid")
    if integer:
        if any(v != int(v) for v in values):
            raise ValueError("grid values must be integers")
        return tuple(int(v) for v in values)
    return tuple(values)


def _line_numbers(text):
    lines = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            lines.setdefault((section, None), lineno)
            continue
        m = re.match(r"([^=:#;\s][^=:]*?)\s*[=:]", line)
        if m and section is not None:
            lines.setdefault((section, m.group(1).strip()), lineno)
    return lines


def _convert(kind, raw):
    if kind == "float":
        value = float(raw)
        if not math.isfinite(value):
            raise ValueError("must be finite")
        return value
    if kind == "int":
        value = float(raw)
        if value != int(value):
            raise ValueError("must be an integer")
        return int(value)
    if kind == "float_grid":
        return parse_grid(raw)
    if kind == "int_grid":
        return parse_grid(raw, integer=True)
    if kind == "mode":
        if raw not in MODES:
            raise ValueError(f"unknown mode; expected one of {MODES}")
        return raw
    if kind == "closure":
        if raw not in CLOSURES:
            raise ValueError(f"unknown closure; expected one of {CLOSURES}")
        return raw
    raise AssertionError(kind)


def _check_invariants(cfg, where):
    problems = []

    def bad(key, message):
        section = next(s for s, keys in SCHEMA.items() if key in keys)
        problems.append(Violation(f"{section}.{key}", where(section, key), message))

    if cfg.delta <= 0:
        bad("delta", "delta must be > 0: a non-zero minimum gap is required")
    if cfg.T <= 0:
        bad("T", "T must be > 0")
    if cfg.delta > 0 and cfg.epsilon0 <= cfg.delta:
        bad("epsilon0", "epsilon0 must exceed delta")
    if any(g < 0 for g in cfg.gamma_x):
        bad("gamma_x", "relaxation rates must be >= 0")
    if any(g < 0 for g in cfg.gamma_z):
        bad("gamma_z", "relaxation rates must be >= 0")
    if any(v < 1 for v in cfg.N):
        bad("N", "boson numbers must be >= 1")
    if any(v < 1 for v in cfg.n):
        bad("n", "measurement counts must be >= 1")
    if not 0 < cfg.target_pe < 1:
        bad("target_pe", "target_pe must lie in (0, 1)")
    if cfg.samples < 2:
        bad("samples", "need at least two output samples")
    if cfg.rtol <= 0:
        bad("rtol", "rtol must be > 0")
    if cfg.atol <= 0:
        bad("atol", "atol must be > 0")
    if cfg.workers < 1:
        bad("workers", "workers must be >= 1")
    if not 0 < cfg.T_lo < cfg.T_hi:
        bad("T_lo", "need 0 < T_lo < T_hi")
    if not 0 < cfg.rel_precision < 1:
        bad("rel_precision", "rel_precision must lie in (0, 1)")
    return problems


def parse_config(text, mode=None):
    """Parse configuration text into a validated ``RunConfig``.

    ``mode`` (from the command line) fills in or must agree with ``run.mode``.
    Every problem found is collected and raised together as ``ConfigError``.
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", 0) or 0
        raise ConfigError([Violation("<syntax>", line, str(exc).splitlines()[0])]) from exc

    lines = _line_numbers(text)

    def where(section, key):
        return lines.get((section, key), lines.get((section, None), 0))

    violations = []
    values = {}
    for section in parser.sections():
        if section not in SCHEMA:
            violations.append(Violation(section, where(section, None), "unknown section"))
            continue
        for key, raw in parser.items(section):
            kind = SCHEMA[section].get(key)
            if kind is None:
                violations.append(Violation(f"{section}.{key}", where(section, key), "unknown key"))
                continue
            try:
                values[key] = _convert(kind, raw.strip())
            except ValueError as exc:
                violations.append(Violation(f"{section}.{key}", where(section, key),
                                            f"invalid value {raw.strip()!r}: {exc}"))

    file_mode = values.pop("mode", None)
    if mode is not None and file_mode is not None and mode != file_mode:
        violations.append(Violation("run.mode", where("run", "mode"),
                                    f"config says {file_mode!r} but command is {mode!r}"))
    chosen = mode or file_mode
    if chosen is None:
        violations.append(Violation("run.mode", 0, "no mode given in config or on the command line"))
    elif chosen not in MODES:
        violations.append(Violation("run.mode", 0, f"unknown mode {chosen!r}"))
    if violations:
        raise ConfigError(violations)

    cfg = replace(default_config(chosen), **values)
    violations = _check_invariants(cfg, where)
    if violations:
        raise ConfigError(violations)
    return cfg
