"""Run configuration: INI-style sections mirroring the RunConfig fields."""
from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .potentials import PotentialConfig, RampSpec


def _floats(raw: str) -> tuple[float, ...]:
    return tuple(float(x) for x in raw.replace(";", ",").split(",") if x.strip())


def _ints(raw: str) -> tuple[int, ...]:
    return tuple(int(x) for x in raw.replace(";", ",").split(",") if x.strip())


def _opt_float(raw: str) -> float | None:
    return None if raw.strip().lower() in ("", "none", "off") else float(raw)


def _bool(raw: str) -> bool:
    v = raw.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


@dataclass(frozen=True)
class Physics:
    m: float = 1.0
    eta: float = 0.5
    a: float = 4.0
    L: float = 40.0


@dataclass(frozen=True)
class Numerics:
    N: int = 256
    Lambda_damp: float | None = 5.0
    grid_points: int = 512
    epsilons: tuple[float, ...] = ()  # empty: evenly spaced over the resolvable window
    epsilon_count: int = 9
    energy_window: float = 5.0
    convergence_N: tuple[int, ...] = (128, 256, 512)
    bilinear_eps_max: float = 0.2
    free_L: float = 10.0
    free_N: int = 8192
    free_Lambda: float | None = None  # default k_max / 4.5
    free_epsilons: tuple[float, ...] = (0.02, 0.03, 0.04, 0.05, 0.06, 0.08, 0.1)


@dataclass(frozen=True)
class Evolution:
    N: int = 128
    t_f: float = 20.0
    dt: float = 0.005
    t_start: float = -1.0
    t_end: float | None = None
    save_every: int = 20
    mode_index: int = 0
    order_factors: tuple[float, ...] = (2.0, 1.0, 0.5)
    t_f_alt: tuple[float, ...] = (10.0, 40.0)


@dataclass(frozen=True)
class Flags:
    compensate: bool = True
    notes: str = "half-commutator charge density; gamma0 = sigma3, gamma5 = sigma1"


@dataclass(frozen=True)
class Output:
    directory: str = "runs"
    formats: tuple[str, ...] = ("csv",)


_PARSERS = {
    float: float,
    int: int,
    bool: _bool,
    str: str,
    "float | None": _opt_float,
    "tuple[float, ...]": _floats,
    "tuple[int, ...]": _ints,
    "tuple[str, ...]": lambda s: tuple(x.strip() for x in s.split(",") if x.strip()),
}


def _parser_for(ftype) -> callable:
    key = ftype if ftype in _PARSERS else str(ftype)
    # dataclass annotations are strings under postponed evaluation
    return _PARSERS.get(key) or {"float": float, "int": int, "bool": _bool, "str": str}[key]


@dataclass(frozen=True)
class RunConfig:
    physics: Physics = field(default_factory=Physics)
    numerics: Numerics = field(default_factory=Numerics)
    evolution: Evolution = field(default_factory=Evolution)
    flags: Flags = field(default_factory=Flags)
    output: Output = field(default_factory=Output)

    SECTIONS = ("physics", "numerics", "evolution", "flags", "output")

    # -- derived objects ---------------------------------------------------
    def potential(self, N: int | None = None, section: str = "numerics", **kw) -> PotentialConfig:
        p, n = self.physics, self.numerics
        args = dict(m=p.m, eta=p.eta, a=p.a, L=p.L, N=n.N if N is None else N,
                    compensate=self.flags.compensate, Lambda_damp=n.Lambda_damp)
        args.update(kw)
        try:
            return PotentialConfig(**args)
        except ConfigError as exc:
            raise ConfigError(f"{_section_of(str(exc), section)}{exc}") from None

    def ramp(self, t_f: float | None = None) -> RampSpec:
        return RampSpec(self.evolution.t_f if t_f is None else t_f)

    def epsilons(self) -> np.ndarray:
        from .vacuum import check_epsilons, default_epsilons

        cfg = self.potential()
        if self.numerics.epsilons:
            try:
                return check_epsilons(cfg, self.numerics.epsilons)
            except ValueError as exc:
                raise ConfigError(f"numerics.epsilons: {exc}") from None
        return default_epsilons(cfg, self.numerics.epsilon_count)

    def validate(self) -> "RunConfig":
        self.potential()
        self.potential(N=self.evolution.N, section="evolution")
        self.epsilons()
        n = self.numerics
        if n.grid_points < 16:
            raise ConfigError("numerics.grid_points: need at least 16")
        if any(N < 16 for N in n.convergence_N):
            raise ConfigError("numerics.convergence_N: every entry must be >= 16")
        if not self.evolution.save_every >= 1:
            raise ConfigError("evolution.save_every: must be >= 1")
        bad = set(self.output.formats) - {"csv"}
        if bad:
            raise ConfigError(f"output.formats: unsupported {sorted(bad)}")
        return self

    def flat(self) -> dict[str, str]:
        out = {}
        for sec in self.SECTIONS:
            for k, v in asdict(getattr(self, sec)).items():
                out[f"{sec}.{k}"] = _fmt(v)
        return out


def _section_of(msg: str, numeric_section: str) -> str:
    name = msg.split(":", 1)[0].strip()
    if name == "N":
        return f"{numeric_section}."
    for sec, cls in (("physics", Physics), ("numerics", Numerics), ("flags", Flags)):
        if name in {f.name for f in fields(cls)}:
            return f"{sec}."
    return ""


def _fmt(v) -> str:
    if isinstance(v, tuple):
        return ",".join(_fmt(x) for x in v)
    if v is None:
        return "none"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _apply(rc: RunConfig, key: str, raw: str, origin: str) -> RunConfig:
    if "." in key:
        sec, name = key.split(".", 1)
    else:
        hits = [s for s in RunConfig.SECTIONS if key in {f.name for f in fields(getattr(rc, s))}]
        if len(hits) != 1:
            where = "no section" if not hits else f"sections {hits}"
            raise ConfigError(f"{key}: ambiguous or unknown key ({where}); use section.key")
        sec, name = hits[0], key
    if sec not in RunConfig.SECTIONS:
        raise ConfigError(f"{sec}: unknown section ({origin})")
    part = getattr(rc, sec)
    spec = {f.name: f for f in fields(part)}
    if name not in spec:
        raise ConfigError(f"{sec}.{name}: unknown key ({origin})")
    try:
        value = _parser_for(spec[name].type)(raw)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{sec}.{name}: cannot parse {raw!r} ({exc})") from None
    return replace(rc, **{sec: replace(part, **{name: value})})


def load_config(path: str | Path | None = None, overrides: list[str] | None = None) -> RunConfig:
    rc = RunConfig()
    if path is not None:
        cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        cp.optionxform = str
        if not cp.read(path, encoding="utf-8"):
            raise ConfigError(f"config file not found: {path}")
        for sec in cp.sections():
            for key, raw in cp.items(sec):
                rc = _apply(rc, f"{sec}.{key}", raw, str(path))
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected key=value")
        key, raw = item.split("=", 1)
        rc = _apply(rc, key.strip(), raw.strip(), "--override")
    return rc.validate()


def write_config(rc: RunConfig, path: str | Path) -> None:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    for sec in RunConfig.SECTIONS:
        cp[sec] = {k: _fmt(v) for k, v in asdict(getattr(rc, sec)).items()}
    with open(path, "w", encoding="utf-8") as fh:
        cp.write(fh)
