"""Run configuration: scenario presets, key-value file parsing, manifests.

Files are INI-style ``key = value`` lines under an optional ``[run]``
header. Lists are comma separated. Presets fill every key not given.

Physical constants the source tables leave open (column height, initial
concentration, the continuous-operation schedules) are provisional preset
values, not measured data.
"""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

from .model import CompressionModel, ConstantProfile, FluxModel, PiecewiseConstant, ProblemKind, ProblemSpec

SCENARIOS = ("ideal-batch", "flocculated-batch", "continuous", "custom")
SECTION = "run"


class ConfigError(ValueError):
    """Invalid configuration; ``field`` or ``line`` locate the problem."""

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.field = field
        self.line = line


@dataclass
class RunConfig:
    scenario: str = "custom"
    problem: str = "A"
    height: float = 1.0
    t_end: float = 3600.0
    u0: float = 0.05
    v_inf: float = 6.05e-4
    exponent_c: float = 12.59
    u_max: float = 1.0
    compression: bool = False
    sigma0: float = 100.0
    u_c: float = 0.23
    exponent_k: float = 8.0
    delta_rho_g: float = 1500.0 * 9.81
    q_times: tuple = (0.0,)
    q_values: tuple = (0.0,)
    psi_times: tuple = ()
    psi_values: tuple = ()
    n0: int = 256
    levels: int = 5
    r: int = 3
    epsilon: float = 1e-4
    theta: float = 1.0
    cfl: float = 0.5
    snapshots: tuple = (60.0, 300.0, 1800.0, 3600.0)
    out: str = "out"

    def validate(self) -> "RunConfig":
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}", "scenario")
        if self.problem not in ("A", "B"):
            raise ConfigError("must be A or B", "problem")
        if self.levels < 0:
            raise ConfigError("must be >= 0", "levels")
        if self.n0 <= 0 or self.n0 % 2 ** self.levels:
            raise ConfigError(f"{self.n0} is not divisible by 2**levels = {2 ** self.levels}", "n0")
        if self.r < 1 or self.r % 2 == 0:
            raise ConfigError("must be an odd integer >= 1", "r")
        if self.n0 // 2 ** self.levels + 1 < self.r + 1:
            raise ConfigError("coarsest grid too small for the interpolation order", "levels")
        if not 0.0 <= self.theta <= 2.0:
            raise ConfigError("must lie in [0, 2]", "theta")
        if not 0.0 < self.cfl <= 1.0:
            raise ConfigError("must lie in (0, 1]", "cfl")
        if self.epsilon < 0.0:
            raise ConfigError("must be >= 0", "epsilon")
        if self.height <= 0.0:
            raise ConfigError("must be positive", "height")
        if self.t_end < 0.0:
            raise ConfigError("must be >= 0", "t_end")
        if not 0.0 <= self.u0 <= self.u_max:
            raise ConfigError("must lie in [0, u_max]", "u0")
        if any(t < 0.0 or t > self.t_end for t in self.snapshots):
            raise ConfigError("snapshot times must lie in [0, t_end]", "snapshots")
        if len(self.q_times) != len(self.q_values) or not self.q_times:
            raise ConfigError("q_times and q_values must be non-empty and equally long", "q_values")
        if any(q > 0.0 for q in self.q_values):
            raise ConfigError("bulk velocity must be <= 0", "q_values")
        if self.problem == "B" and (not self.psi_times or len(self.psi_times) != len(self.psi_values)):
            raise ConfigError("Problem B needs equally long psi_times and psi_values", "psi_values")
        if self.problem == "A" and self.psi_times:
            raise ConfigError("Problem A takes no feed flux", "psi_times")
        return self

    def build_problem(self) -> ProblemSpec:
        flux = FluxModel(self.v_inf, self.exponent_c, self.u_max)
        comp = (CompressionModel(self.sigma0, self.u_c, self.exponent_k, self.delta_rho_g)
                if self.compression else None)
        psi = PiecewiseConstant(self.psi_times, self.psi_values) if self.problem == "B" else None
        try:
            return ProblemSpec(self.height, self.t_end, flux, comp,
                               PiecewiseConstant(self.q_times, self.q_values), psi,
                               ConstantProfile(self.u0), ProblemKind(self.problem))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


PRESETS = {
    "custom": {},
    "ideal-batch": dict(
        problem="A", height=1.0, t_end=3600.0, u0=0.2, compression=False,
        n0=256, levels=5, epsilon=1e-4, snapshots=(60.0, 300.0, 1800.0, 3600.0)),
    "flocculated-batch": dict(
        problem="A", height=1.0, t_end=14400.0, u0=0.08, compression=True, u_c=0.23,
        n0=128, levels=5, epsilon=1e-3, snapshots=(60.0, 1800.0, 3600.0, 7200.0, 14400.0)),
    "continuous": dict(
        problem="B", height=4.0, t_end=57600.0, u0=0.08, compression=True,
        q_times=(0.0, 28800.0), q_values=(-1.0e-5, -1.2e-5),
        psi_times=(0.0, 28800.0), psi_values=(-4.0e-6, -6.0e-6),
        n0=512, levels=5, epsilon=5e-4,
        snapshots=(3600.0, 14400.0, 28800.0, 43200.0, 57600.0)),
}

_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(name: str, raw: str, line: Optional[int]):
    kind = _TYPES[name]
    raw = raw.strip()
    try:
        if kind == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "tuple":
            return tuple(float(v) for v in raw.split(",") if v.strip())
        return raw
    except ValueError:
        raise ConfigError(f"cannot parse {raw!r} as {kind}", name, line) from None


def preset(scenario: str) -> RunConfig:
    if scenario not in PRESETS:
        raise ConfigError(f"unknown scenario {scenario!r}", "scenario")
    return dataclasses.replace(RunConfig(), scenario=scenario, **PRESETS[scenario])


def parse_text(text: str) -> dict:
    """Parse config text into ``{key: (raw_value, line_number)}``."""
    lines = text.splitlines()
    offset = 0
    first = next((ln.strip() for ln in lines if ln.strip() and not ln.strip().startswith(("#", ";"))), "")
    if not first.startswith("["):
        text = f"[{SECTION}]\n" + text
        offset = 1
    parser = configparser.ConfigParser(interpolation=None, strict=True, delimiters=("=",),
                                       comment_prefixes=("#", ";"), inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] - offset if exc.errors else None
        raise ConfigError("malformed line", line=lineno) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(exc.message.split(":")[-1].strip(), line=(exc.lineno or 0) - offset) from None
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    extra = [s for s in parser.sections() if s != SECTION]
    if extra:
        raise ConfigError(f"unknown section [{extra[0]}]")
    if not parser.has_section(SECTION):
        return {}
    where = _line_numbers(lines, offset)
    return {k: (v, where.get(k)) for k, v in parser.items(SECTION)}


def _line_numbers(lines, offset) -> dict:
    out = {}
    for i, ln in enumerate(lines, start=1):
        s = ln.strip()
        if "=" in s and not s.startswith(("#", ";", "[")):
            out.setdefault(s.split("=", 1)[0].strip(), i)
    return out


def from_mapping(values: dict, scenario: Optional[str] = None) -> RunConfig:
    raw_scenario = values.get("scenario", (None, None))[0]
    name = scenario or (raw_scenario.strip() if raw_scenario else None) or "custom"
    cfg = preset(name)
    updates = {}
    for key, (raw, line) in values.items():
        if key not in _TYPES:
            raise ConfigError("unknown key", key, line)
        if key == "scenario":
            continue
        updates[key] = _convert(key, raw, line)
    return dataclasses.replace(cfg, **updates)


def load_config(path=None, scenario: Optional[str] = None, overrides: Optional[dict] = None) -> RunConfig:
    """Preset defaults, then file values, then ``overrides``; validated."""
    values = parse_text(Path(path).read_text()) if path is not None else {}
    cfg = from_mapping(values, scenario)
    if overrides:
        unknown = set(overrides) - set(_TYPES)
        if unknown:
            raise ConfigError("unknown key", sorted(unknown)[0])
        cfg = dataclasses.replace(cfg, **overrides)
    return cfg.validate()


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


def dump_config(cfg: RunConfig) -> str:
    lines = [f"[{SECTION}]"]
    for f in fields(cfg):
        lines.append(f"{f.name} = {_format(getattr(cfg, f.name))}")
    return "\n".join(lines) + "\n"
