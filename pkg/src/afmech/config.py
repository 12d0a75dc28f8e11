"""Run configuration: JSON file plus ``key=value`` overrides."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields

from .integrate import IntegratorConfig


class ConfigError(ValueError):
    pass


@dataclass
class GridSection:
    height: int = 8
    width: int = 8
    radius: int = 1
    boundary: str = "torus"
    norm: str = "l1"


@dataclass
class IntegratorSection:
    method: str = "geometric-euler"
    h: float = 0.1
    t_end: float = 50.0
    stride: int = 1
    eps_conv: float | None = 1e-3

    def build(self, stop: bool = True) -> IntegratorConfig:
        try:
            return IntegratorConfig(
                method=self.method,
                h=float(self.h),
                t_end=float(self.t_end),
                stride=self.stride,
                eps_conv=self.eps_conv if stop else None,
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"integrator: {exc}") from exc


@dataclass
class TraceSection:
    flow: str = "sflow"
    init: str | list = "data"
    # Traces never stop on convergence, so long S-flow horizons saturate.
    # ``None`` falls back to ``integrator.t_end``.
    t_end: float | None = 10.0

    def __post_init__(self):
        if self.flow not in ("sflow", "counterexample"):
            raise ConfigError(f"unknown trace.flow {self.flow!r}; choose sflow or counterexample")
        if not isinstance(self.init, list) and self.init not in ("data", "barycenter"):
            raise ConfigError(f"unknown trace.init {self.init!r}; use data, barycenter or a list")
        if self.t_end is not None and not self.t_end > 0:
            raise ConfigError(f"trace.t_end must be positive or null, got {self.t_end!r}")


@dataclass
class ManeSection:
    query: str = "barycenter"

    def __post_init__(self):
        if self.query not in ("barycenter", "data"):
            raise ConfigError(f"unknown mane.query {self.query!r}; choose barycenter or data")


@dataclass
class RunConfig:
    """Everything a CLI run depends on; its canonical JSON is hashed."""

    grid: GridSection = field(default_factory=GridSection)
    labels: int = 3
    noise: float = 0.0
    seed: int = 0
    weights: str | list = "uniform"
    integrator: IntegratorSection = field(default_factory=IntegratorSection)
    trace: TraceSection = field(default_factory=TraceSection)
    mane: ManeSection = field(default_factory=ManeSection)

    def to_dict(self) -> dict:
        return asdict(self)

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


_SECTIONS = {
    "grid": GridSection,
    "integrator": IntegratorSection,
    "trace": TraceSection,
    "mane": ManeSection,
}

_SCALARS = {
    "labels": int,
    "noise": float,
    "seed": int,
    "height": int,
    "width": int,
    "radius": int,
    "stride": int,
    "h": float,
    "t_end": float,
}


def _coerce(key: str, value):
    kind = _SCALARS.get(key)
    if kind is None or value is None:
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    if kind is int:
        if value != int(value):
            raise ConfigError(f"{key} must be an integer, got {value!r}")
        return int(value)
    return float(value)


def _build(cls, data, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where or 'config'} must be a JSON object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where or 'config'}: {', '.join(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key in _SECTIONS and cls is RunConfig:
            kwargs[key] = _build(_SECTIONS[key], value, key)
        else:
            kwargs[key] = _coerce(key, value)
    return cls(**kwargs)


def parse_json(text: str, source: str = "<config>") -> dict:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def parse_override(item: str) -> tuple[list[str], object]:
    """``"a.b=1"`` -> ``(["a", "b"], 1)``; values that are not JSON stay strings."""
    key, sep, raw = item.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"override {item!r} is not of the form key=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip().split("."), value


def apply_overrides(data: dict, overrides) -> dict:
    for item in overrides or ():
        path, value = parse_override(item)
        node = data
        for part in path[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"override {item!r}: {part} is not a section")
            node = child
        node[path[-1]] = value
    return data


def load_config(path=None, overrides=(), seed=None) -> RunConfig:
    """Read ``path`` (optional), apply overrides, then the explicit seed."""
    data = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        data = parse_json(text, str(path))
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    apply_overrides(data, overrides)
    if seed is not None:
        data["seed"] = seed
    cfg = _build(RunConfig, data, "")
    cfg.integrator.build()
    if cfg.seed < 0 or cfg.seed >= 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return cfg
