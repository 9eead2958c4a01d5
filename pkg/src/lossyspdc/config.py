"""Run configuration: INI files in, resolved parameters out.

A config file has the sections ``[physics]``, ``[grid]``, ``[steps]``,
``[output]`` and optionally ``[sweep]``; every key is ``key = value``.
Lengths are in units of ``L_NL``, times in units of ``tau_P``; ``inf``
disables a process and ``auto`` lets the window or step be derived from the
physics.  A ``manifest.json`` written by a previous run is accepted as a
config too, which is how runs are reproduced.

Example::

    [physics]
    l_ov = 0.1
    l_d = 3
    l_total = 1

    [grid]
    n = 256
    t_window = auto

    [steps]
    dz = auto
    snapshots = 0.05, 0.333, 1
"""

from __future__ import annotations

import configparser
import itertools
import json
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .core import PhysicalParams, SimGrid, build_grid, suggest_window
from .propagator import StepPlan, auto_dz, make_plan

WINDOW_MARGIN = 5.0

_PHYSICS_KEYS = ("l_nl", "l_a", "l_ov", "l_d", "tau_p", "l_total", "pump_damping")
_SCHEMA = {
    "physics": _PHYSICS_KEYS,
    "grid": ("n", "t_window"),
    "steps": ("dz", "trace_every", "snapshots"),
    "output": ("directory", "modes", "convergence"),
}
SWEEPABLE = _PHYSICS_KEYS + ("n", "t_window", "dz")


class ConfigError(ValueError):
    """Malformed or inconsistent configuration; ``line`` is 1-based when known."""

    def __init__(self, message: str, source: str | None = None, line: int | None = None):
        self.source = source
        self.line = line
        where = ""
        if source:
            where = f"{source}:{line}: " if line else f"{source}: "
        super().__init__(where + message)


@dataclass(frozen=True)
class RunConfig:
    """Everything one run needs.  ``None`` for ``t_window``/``dz`` means auto."""

    params: PhysicalParams = field(default_factory=PhysicalParams)
    n: int = 256
    t_window: float | None = None
    dz: float | None = None
    trace_every: int = 1
    snapshots: tuple[float, ...] = ()
    directory: str = "out"
    n_modes: int = 10
    convergence: bool = False
    sweep: dict = field(default_factory=dict)

    # -- resolution ---------------------------------------------------------
    def window(self) -> float:
        if self.t_window is not None:
            return self.t_window
        return suggest_window(self.params, margin=WINDOW_MARGIN)

    def step(self) -> float:
        return self.dz if self.dz is not None else auto_dz(self.params)

    def grid(self) -> SimGrid:
        return build_grid(self.n, self.window())

    def plan(self) -> StepPlan:
        return make_plan(self.params.l_total, self.step(), self.snapshots, self.trace_every)

    def resolved(self) -> "RunConfig":
        """Copy with the auto window and step replaced by their values."""
        return replace(self, t_window=self.window(), dz=self.step())

    # -- sweeps -------------------------------------------------------------
    def expand(self) -> list[tuple[dict, "RunConfig"]]:
        """Cartesian product of the sweep axes, one single-run config per point."""
        if not self.sweep:
            return [({}, self)]
        names = list(self.sweep)
        out = []
        for values in itertools.product(*(self.sweep[k] for k in names)):
            point = dict(zip(names, values))
            out.append((point, _apply_point(replace(self, sweep={}), point)))
        return out

    # -- serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        """JSON-safe dict; floats survive exactly, ``inf`` is written as a string."""
        return {
            "physics": {k: _dump(v) for k, v in self.params.to_dict().items()},
            "grid": {"n": self.n, "t_window": _dump(self.t_window, auto=True)},
            "steps": {"dz": _dump(self.dz, auto=True), "trace_every": self.trace_every,
                      "snapshots": [_dump(z) for z in self.snapshots]},
            "output": {"directory": self.directory, "modes": self.n_modes,
                       "convergence": self.convergence},
            "sweep": {k: [_dump(v) for v in vals] for k, vals in self.sweep.items()},
        }

    @classmethod
    def from_dict(cls, data: dict, source: str | None = None) -> "RunConfig":
        sections = {}
        for name, body in data.items():
            if not isinstance(body, dict):
                raise ConfigError(f"section '{name}' must be a mapping", source)
            sections[name] = {k: _undump(v) for k, v in body.items()}
        return _build(sections, source, lambda section, key: None)


def _dump(v, auto=False):
    if v is None:
        return "auto" if auto else None
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else "-inf"
    return v


def _undump(v):
    if isinstance(v, list):
        return ", ".join(repr(x) if isinstance(x, float) else str(x) for x in v)
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _apply_point(cfg: RunConfig, point: dict) -> RunConfig:
    phys = {k: v for k, v in point.items() if k in _PHYSICS_KEYS}
    other = {k: v for k, v in point.items() if k not in _PHYSICS_KEYS}
    if "n" in other:
        other["n"] = int(other["n"])
    return replace(cfg, params=cfg.params.with_(**phys), **other)


# ---------------------------------------------------------------------------
# value parsing
# ---------------------------------------------------------------------------

def _float(text: str, allow_auto=False, allow_none=False):
    t = text.strip().lower()
    if allow_auto and t == "auto":
        return None
    if allow_none and t in ("none", "off", ""):
        return None
    try:
        return float(t)
    except ValueError:
        raise ValueError(f"expected a number{' or auto' if allow_auto else ''}, got {text!r}") from None


def _int(text: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise ValueError(f"expected an integer, got {text!r}") from None


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected true/false, got {text!r}")


def _floats(text: str) -> tuple[float, ...]:
    parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
    return tuple(_float(p) for p in parts)


def _build(sections: dict, source, line_of) -> RunConfig:
    for name, body in sections.items():
        if name not in _SCHEMA and name != "sweep":
            raise ConfigError(f"unknown section [{name}]", source, line_of(name, None))
        allowed = SWEEPABLE if name == "sweep" else _SCHEMA[name]
        for key in body:
            if key not in allowed:
                raise ConfigError(f"unknown key '{key}' in [{name}] (allowed: {', '.join(allowed)})",
                                  source, line_of(name, key))

    def get(section, key, conv, default):
        body = sections.get(section, {})
        if key not in body:
            return default
        try:
            return conv(body[key])
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}", source, line_of(section, key)) from None

    phys = {}
    for key in _PHYSICS_KEYS:
        conv = (lambda s: _float(s, allow_none=True)) if key == "pump_damping" else _float
        val = get("physics", key, conv, "missing")
        if val != "missing":
            phys[key] = val
    try:
        params = PhysicalParams(**phys)
    except ValueError as exc:
        raise ConfigError(f"[physics] {exc}", source) from None

    sweep = {}
    for key, text in sections.get("sweep", {}).items():
        try:
            values = _floats(text)
        except ValueError as exc:
            raise ConfigError(f"[sweep] {key}: {exc}", source, line_of("sweep", key)) from None
        if not values:
            raise ConfigError(f"[sweep] {key}: empty value list", source, line_of("sweep", key))
        sweep[key] = values

    cfg = RunConfig(
        params=params,
        n=get("grid", "n", _int, 256),
        t_window=get("grid", "t_window", lambda s: _float(s, allow_auto=True), None),
        dz=get("steps", "dz", lambda s: _float(s, allow_auto=True), None),
        trace_every=get("steps", "trace_every", _int, 1),
        snapshots=get("steps", "snapshots", _floats, ()),
        directory=get("output", "directory", str.strip, "out"),
        n_modes=get("output", "modes", _int, 10),
        convergence=get("output", "convergence", _bool, False),
        sweep=sweep,
    )
    _check(cfg, source)
    for _, point_cfg in cfg.expand():
        _check(point_cfg, source)
    return cfg


def _check(cfg: RunConfig, source):
    if cfg.trace_every < 1:
        raise ConfigError("[steps] trace_every must be >= 1", source)
    if cfg.n_modes < 0:
        raise ConfigError("[output] modes must be >= 0", source)
    if cfg.dz is not None and not cfg.dz > 0.0:
        raise ConfigError("[steps] dz must be positive", source)
    for z in cfg.snapshots:
        if not 0.0 <= z <= cfg.params.l_total:
            raise ConfigError(f"[steps] snapshot z={z:g} outside [0, l_total={cfg.params.l_total:g}]", source)
    try:
        cfg.grid()
    except ValueError as exc:
        raise ConfigError(f"[grid] {exc}", source) from None
    if cfg.n_modes > 2 * cfg.n:
        raise ConfigError(f"[output] modes={cfg.n_modes} exceeds 2n={2 * cfg.n}", source)


# ---------------------------------------------------------------------------
# files
# ---------------------------------------------------------------------------

def _line_finder(text: str):
    lines = text.splitlines()

    def line_of(section, key):
        current = None
        for i, raw in enumerate(lines, start=1):
            s = raw.strip()
            m = re.match(r"\[(.+)\]$", s)
            if m:
                current = m.group(1).strip()
                if key is None and current == section:
                    return i
                continue
            if key is not None and current == section and re.match(rf"{re.escape(key)}\s*[=:]", s, re.I):
                return i
        return None

    return line_of


def parse_config(text: str, source: str | None = None) -> RunConfig:
    """Parse INI text.  Keys are case-insensitive; ``#`` and ``;`` start comments."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"),
                                       default_section="__defaults__")
    try:
        parser.read_string(text, source=source or "<config>")
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(str(exc).splitlines()[0], source, line) from None
    sections = {name: dict(parser.items(name)) for name in parser.sections()}
    return _build(sections, source, _line_finder(text))


def load_config(path: str | Path) -> RunConfig:
    """Read an INI config or a ``manifest.json`` from a previous run."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    if path.suffix.lower() == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg}", str(path), exc.lineno) from None
        if "config" in data:
            data = data["config"]
        return RunConfig.from_dict(data, str(path))
    return parse_config(text, str(path))
