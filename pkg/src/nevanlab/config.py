"""Run configuration: flat ``key = value`` text with section headers.

Example::

    [manifold]
    base = euclidean
    m = 1

    [exhaustion]
    mode = parabolic

    [map]
    family = exp

    [divisors]
    points = 0, 1, inf

    [grid]
    min = 5
    max = 60
    count = 12

Every value error names the line it came from.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError
from .quad import QuadratureSpec

KNOWN = {
    "run": {"seed", "out"},
    "manifold": {"base", "m", "torus", "projective", "fs_scale"},
    "exhaustion": {"mode", "epsilon", "a", "renormalize"},
    "map": {"family", "coord", "value", "mobius", "num", "den", "scale", "coords"},
    "divisors": {"points"},
    "grid": {"min", "max", "count", "spacing"},
    "quadrature": {"method", "rtol", "atol", "max_level", "min_level", "mc_samples", "max_points"},
    "fmt": {"tolerance"},
    "smt": {"delta", "theta_rtol"},
    "geometry": {"radii", "directions", "samples", "gradient_radius", "properties"},
}

_SECTION = re.compile(r"^\s*\[([^\]]+)\]")
_KEY = re.compile(r"^\s*([^=:#;\s\[][^=:]*?)\s*[=:]")


@dataclass(frozen=True)
class Grid:
    lo: float
    hi: float
    count: int
    spacing: str = "linear"

    def __post_init__(self):
        if self.count < 2:
            raise ConfigError("grid count must be at least 2")
        if not (0 < self.lo < self.hi):
            raise ConfigError("grid needs 0 < min < max")
        if self.spacing not in ("linear", "log"):
            raise ConfigError(f"grid spacing must be linear or log, got {self.spacing!r}")

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.lo, self.hi, self.count)
        return np.linspace(self.lo, self.hi, self.count)

    def text(self) -> str:
        base = f"{self.lo!r}:{self.hi!r}:{self.count}"
        return base + (":log" if self.spacing == "log" else "")

    @classmethod
    def parse(cls, text: str) -> "Grid":
        """``min:max:count[:log]``."""
        parts = text.strip().split(":")
        if len(parts) not in (3, 4):
            raise ConfigError(f"grid must look like min:max:count[:log], got {text!r}")
        try:
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as exc:
            raise ConfigError(f"bad grid {text!r}: {exc}") from None
        spacing = parts[3].strip().lower() if len(parts) == 4 else "linear"
        return cls(lo, hi, n, spacing)


@dataclass
class RunConfig:
    manifold: dict[str, str]
    mode: str = "auto"
    epsilon: float | None = None
    A: float | None = None
    renormalize: bool = False
    map: dict[str, str] = field(default_factory=lambda: {"family": "constant"})
    divisors: list[str] = field(default_factory=lambda: ["0", "1", "inf"])
    grid: Grid = field(default_factory=lambda: Grid(1.0, 2.0, 2))
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)
    seed: int = 0
    out: str = "out"
    tolerance: float = 1e-3
    delta: float = 0.1
    theta_rtol: float = 1e-4
    geometry: dict[str, str] = field(default_factory=dict)
    source: str | None = None

    def resolved(self) -> dict[str, dict[str, str]]:
        """Every setting after defaults and overrides, as strings."""
        q = self.quadrature
        ex = {"mode": self.mode, "renormalize": "yes" if self.renormalize else "no"}
        if self.epsilon is not None:
            ex["epsilon"] = repr(self.epsilon)
        if self.A is not None:
            ex["A"] = repr(self.A)
        return {
            "run": {"seed": str(self.seed), "out": self.out},
            "manifold": dict(sorted(self.manifold.items())),
            "exhaustion": ex,
            "map": dict(sorted(self.map.items())),
            "divisors": {"points": ", ".join(self.divisors)},
            "grid": {
                "min": repr(self.grid.lo),
                "max": repr(self.grid.hi),
                "count": str(self.grid.count),
                "spacing": self.grid.spacing,
            },
            "quadrature": {
                "method": q.method,
                "rtol": repr(q.rtol),
                "atol": repr(q.atol),
                "min_level": str(q.min_level),
                "max_level": str(q.max_level),
                "mc_samples": str(q.mc_samples),
                "max_points": str(q.max_points),
            },
            "fmt": {"tolerance": repr(self.tolerance)},
            "smt": {"delta": repr(self.delta), "theta_rtol": repr(self.theta_rtol)},
            "geometry": dict(sorted(self.geometry.items())),
        }

    def to_text(self) -> str:
        lines = []
        for sec, items in self.resolved().items():
            if not items:
                continue
            lines.append(f"[{sec}]")
            lines += [f"{k} = {v}" for k, v in items.items()]
            lines.append("")
        return "\n".join(lines)

    def with_overrides(self, out=None, seed=None, grid=None, tolerance=None) -> "RunConfig":
        cfg = replace(self)
        if out is not None:
            cfg.out = str(out)
        if seed is not None:
            cfg.seed = int(seed)
            cfg.quadrature = replace(cfg.quadrature, seed=int(seed))
        if grid is not None:
            cfg.grid = Grid.parse(grid) if isinstance(grid, str) else grid
        if tolerance is not None:
            if not tolerance > 0:
                raise ConfigError("tolerance must be positive")
            cfg.tolerance = float(tolerance)
        return cfg


def _line_map(text: str) -> dict[tuple[str, str], int]:
    out: dict[tuple[str, str], int] = {}
    sec = None
    for i, line in enumerate(text.splitlines(), start=1):
        m = _SECTION.match(line)
        if m:
            sec = m.group(1).strip().lower()
            out[(sec, "")] = i
            continue
        m = _KEY.match(line)
        if m and sec is not None and not line.startswith((" ", "\t")):
            out[(sec, m.group(1).strip().lower())] = i
    return out


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "yes", "true", "on"):
        return True
    if t in ("0", "no", "false", "off"):
        return False
    raise ValueError(f"expected yes/no, got {text!r}")


def parse_config(text: str, source: str | None = None) -> RunConfig:
    """Parse configuration text; errors carry the offending line number."""
    cp = configparser.ConfigParser(interpolation=None, strict=True, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=source or "<config>")
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("settings must follow a [section] header", exc.lineno) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(exc.message.split("\n")[0], exc.lineno) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("cannot parse line (expected key = value)", line) from None
    lines = _line_map(text)

    for sec in cp.sections():
        if sec.lower() not in KNOWN:
            raise ConfigError(f"unknown section [{sec}]", lines.get((sec.lower(), "")))
        for key in cp[sec]:
            if key not in KNOWN[sec.lower()]:
                raise ConfigError(f"unknown key {key!r} in [{sec}]", lines.get((sec.lower(), key)))
    if not cp.has_section("manifold"):
        raise ConfigError("missing [manifold] section")

    def get(sec, key, conv, default=None):
        if not cp.has_option(sec, key):
            return default
        raw = cp.get(sec, key).strip()
        try:
            return conv(raw)
        except (ValueError, ConfigError) as exc:
            msg = exc.args[0] if exc.args else str(exc)
            raise ConfigError(f"[{sec}] {key}: {msg}", lines.get((sec, key))) from None

    cfg = RunConfig(manifold={k: v.strip() for k, v in cp["manifold"].items()})
    cfg.source = source
    cfg.seed = get("run", "seed", int, 0)
    cfg.out = get("run", "out", str, "out")
    cfg.mode = get("exhaustion", "mode", lambda s: s.lower(), "auto")
    cfg.epsilon = get("exhaustion", "epsilon", float)
    cfg.A = get("exhaustion", "a", float)
    cfg.renormalize = get("exhaustion", "renormalize", _bool, False)
    if cp.has_section("map"):
        cfg.map = {k: v.strip() for k, v in cp["map"].items()}
    pts = get("divisors", "points", lambda s: [p.strip() for p in s.split(",") if p.strip()])
    if pts is not None:
        cfg.divisors = pts
    if cp.has_section("grid"):
        lo = get("grid", "min", float, 1.0)
        hi = get("grid", "max", float, 2.0)
        n = get("grid", "count", int, 2)
        sp = get("grid", "spacing", lambda s: s.lower(), "linear")
        try:
            cfg.grid = Grid(lo, hi, n, sp)
        except ConfigError as exc:
            raise ConfigError(exc.args[0], lines.get(("grid", ""))) from None
    spec_kw = {}
    for key, conv in (
        ("method", str),
        ("rtol", float),
        ("atol", float),
        ("max_level", int),
        ("min_level", int),
        ("mc_samples", int),
        ("max_points", int),
    ):
        v = get("quadrature", key, conv)
        if v is not None:
            spec_kw[key] = v
    try:
        cfg.quadrature = QuadratureSpec(seed=cfg.seed, **spec_kw)
    except Exception as exc:
        raise ConfigError(f"[quadrature] {exc}", lines.get(("quadrature", ""))) from None
    cfg.tolerance = get("fmt", "tolerance", float, 1e-3)
    cfg.delta = get("smt", "delta", float, 0.1)
    cfg.theta_rtol = get("smt", "theta_rtol", float, 1e-4)
    if cp.has_section("geometry"):
        cfg.geometry = {k: v.strip() for k, v in cp["geometry"].items()}
    return cfg


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, source=path)
