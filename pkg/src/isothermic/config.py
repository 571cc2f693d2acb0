"""Job files: flat ``key = value`` text with ``#`` comments."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ParseError

FAMILIES = ("bubbleton", "cmc-bubbleton", "torus", "revolution", "custom-darboux")

REQUIRED = {
    "bubbleton": ("M", "N", "k", "rho", "c2", "n_min", "n_max"),
    "cmc-bubbleton": ("M", "N", "k", "rho", "n_min", "n_max"),
    "torus": ("M", "N", "k1", "rho1", "k2", "rho2", "c_real"),
    "revolution": ("M", "k", "rho", "p_profile", "q_profile", "cplus", "cminus"),
    "custom-darboux": ("M", "p_profile", "q_profile", "nu", "init_point"),
}


@dataclass(frozen=True)
class JobConfig:
    family: str
    name: str = "job"
    out_dir: str = "."
    M: int | None = None
    N: int | None = None
    k: int | None = None
    rho: int | None = None
    k1: int | None = None
    rho1: int | None = None
    k2: int | None = None
    rho2: int | None = None
    c2: complex | None = None
    branch: int = 1
    c_real: float | None = None
    root_index: int = -1
    n_min: int | None = None
    n_max: int | None = None
    p_profile: tuple | None = None
    q_profile: tuple | None = None
    n_origin: int = 0
    cplus: tuple | None = None
    cminus: tuple | None = None
    nu: float | None = None
    init_point: tuple | None = None
    tol: float = 1e-9
    projection: str | None = None
    ply: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParseError(f"unknown family {self.family!r}; expected one of {', '.join(FAMILIES)}")
        missing = [key for key in REQUIRED[self.family] if getattr(self, key) is None]
        if missing:
            raise ParseError(f"family {self.family} needs {', '.join(missing)}")
        if self.branch not in (1, -1):
            raise ParseError("branch must be 1 or -1")
        if self.projection not in (None, "none", "stereographic"):
            raise ParseError("projection must be none or stereographic")
        for key in ("cplus", "cminus", "init_point"):
            val = getattr(self, key)
            if val is not None and len(val) != 4:
                raise ParseError(f"{key} needs four components w, x, y, z")


_FIELDS = {f.name: f for f in fields(JobConfig)}


def _kind(name: str) -> str:
    t = str(_FIELDS[name].type)
    for kind in ("int", "float", "complex", "tuple", "bool", "str"):
        if t.startswith(kind):
            return kind
    raise AssertionError(t)


def _parse_value(name: str, text: str, line: int):
    kind = _kind(name)
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind == "complex":
            return complex(text.replace(" ", ""))
        if kind == "tuple":
            return tuple(float(v) for v in text.split(","))
        if kind == "bool":
            low = text.lower()
            if low not in ("true", "false"):
                raise ValueError(text)
            return low == "true"
        return text
    except ValueError:
        raise ParseError(f"bad value for {name}: {text!r}", line) from None


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, complex):
        return repr(value).strip("()")
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_config(text: str) -> JobConfig:
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _FIELDS:
            raise ParseError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ParseError(f"duplicate key {key!r}", lineno)
        values[key] = value if key == "family" else _parse_value(key, value, lineno)
    if "family" not in values:
        raise ParseError("missing family")
    return JobConfig(**values)


def format_config(cfg: JobConfig) -> str:
    lines = [f"family = {cfg.family}"]
    defaults = JobConfig.__dataclass_fields__
    for f in fields(cfg):
        if f.name == "family":
            continue
        value = getattr(cfg, f.name)
        if value is None:
            continue
        default = defaults[f.name].default
        if default is not dataclasses.MISSING and value == default and f.name not in REQUIRED[cfg.family]:
            continue
        lines.append(f"{f.name} = {_format_value(value)}")
    return "\n".join(lines) + "\n"


def read_config(path) -> JobConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def write_config(cfg: JobConfig, path) -> None:
    Path(path).write_text(format_config(cfg), encoding="utf-8", newline="\n")
