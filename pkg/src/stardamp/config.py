"""Experiment configuration: one YAML/JSON file, dotted key paths.

Every default lives in the dataclasses below; ``README.md`` reproduces them
as a table.
"""
from __future__ import annotations

import copy
import json
import math
import re
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

DAMPING_PROFILES = ("indicator_beyond_R", "smooth_ramp", "custom_table")
INITIAL_KINDS = ("gaussian_packet", "eigenmode", "custom_table")
FORMATS = ("csv", "json", "trajectory_csv", "checkpoint")


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


@dataclass
class GraphCfg:
    n_edges: int = 3
    L: float = 20.0
    dx: float = 0.05
    allow_small: bool = False


@dataclass
class ParamsCfg:
    lam: float = -1.0  # "lambda" in files
    alpha: int = 3
    dt: float = 0.01
    t_final: float = 20.0
    scheme: str = "strang_split"
    allow_large_dt: bool = False


@dataclass
class DampingCfg:
    profile: str = "indicator_beyond_R"
    alpha0: float = 1.0
    R: float = 5.0
    all_edges: bool = False
    table: str | None = None


@dataclass
class InitialCfg:
    kind: str = "gaussian_packet"
    seed: int = 0
    amplitude: float = 1.0
    center: float | list | None = None
    wavenumber: float | list | None = None
    width: float | list | None = None
    edge_weights: list | None = None
    mode: int = 1
    table: str | None = None


@dataclass
class PicardCfg:
    enabled: bool = False
    tol: float = 1e-10
    max_iter: int = 50
    C: float = 1.0
    T: float = 0.5
    dx: float | None = 0.2
    dt: float | None = 0.05


@dataclass
class AnalysisCfg:
    fit_window_fraction: float = 0.1
    ensemble_size: int = 20
    T_obs: float = 10.0
    T_sweep: list = field(default_factory=lambda: [2.0, 5.0, 10.0, 20.0])
    small_data_threshold: float = 0.1
    workers: int = 1
    picard: PicardCfg = field(default_factory=PicardCfg)


@dataclass
class OutputCfg:
    directory: str = "out"
    stride: int = 1
    formats: list = field(default_factory=lambda: ["csv", "json"])


@dataclass
class ExperimentConfig:
    graph: GraphCfg = field(default_factory=GraphCfg)
    params: ParamsCfg = field(default_factory=ParamsCfg)
    damping: DampingCfg = field(default_factory=DampingCfg)
    initial_data: InitialCfg = field(default_factory=InitialCfg)
    analysis: AnalysisCfg = field(default_factory=AnalysisCfg)
    output: OutputCfg = field(default_factory=OutputCfg)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["params"]["lambda"] = d["params"].pop("lam")
        return d

    @classmethod
    def from_dict(cls, raw: dict | None) -> "ExperimentConfig":
        errors: list[str] = []
        cfg = _build(cls, raw or {}, "", errors)
        if errors:
            raise ConfigError(errors)
        errors = validate(cfg)
        if errors:
            raise ConfigError(errors)
        return cfg

    def replace_path(self, path: str, value) -> "ExperimentConfig":
        d = self.to_dict()
        set_path(d, path, value)
        return ExperimentConfig.from_dict(d)

    def copy(self) -> "ExperimentConfig":
        return copy.deepcopy(self)


def _key(f) -> str:
    return "lambda" if f.name == "lam" else f.name


def _build(cls, raw, prefix, errors):
    if not isinstance(raw, dict):
        errors.append(f"{prefix.rstrip('.') or '<root>'}: expected a mapping")
        return cls()
    known = {_key(f): f for f in fields(cls)}
    for k in raw:
        if k not in known:
            errors.append(f"{prefix}{k}: unknown field")
    kwargs = {}
    for key, f in known.items():
        if key not in raw:
            continue
        val = raw[key]
        sub = _SECTIONS.get((cls, f.name))
        kwargs[f.name] = _build(sub, val, f"{prefix}{key}.", errors) if sub else val
    obj = cls(**kwargs)
    return obj


_SECTIONS = {
    (ExperimentConfig, "graph"): GraphCfg,
    (ExperimentConfig, "params"): ParamsCfg,
    (ExperimentConfig, "damping"): DampingCfg,
    (ExperimentConfig, "initial_data"): InitialCfg,
    (ExperimentConfig, "analysis"): AnalysisCfg,
    (ExperimentConfig, "output"): OutputCfg,
    (AnalysisCfg, "picard"): PicardCfg,
}


def _is_num(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _is_int(x) -> bool:
    return _is_num(x) and float(x) == int(x)


def validate(cfg: ExperimentConfig) -> list[str]:
    """Return every violated constraint as ``"field.path: reason"``."""
    e = []
    g, p, d, ini, a, o = cfg.graph, cfg.params, cfg.damping, cfg.initial_data, cfg.analysis, cfg.output

    if not _is_int(g.n_edges) or g.n_edges < 1:
        e.append("graph.n_edges: must be a positive integer")
    elif g.n_edges < 3 and not g.allow_small:
        e.append("graph.n_edges: must be >= 3 (set graph.allow_small to override)")
    for name in ("L", "dx"):
        if not _is_num(getattr(g, name)) or getattr(g, name) <= 0:
            e.append(f"graph.{name}: must be a positive number")
    if _is_num(g.L) and _is_num(g.dx) and g.L > 0 and g.dx > 0:
        ratio = g.L / g.dx
        if abs(ratio - round(ratio)) > 1e-9 * ratio:
            e.append("graph.dx: L/dx must be an integer")
        elif round(ratio) < 8:
            e.append("graph.dx: L/dx must be at least 8")

    if not _is_num(p.lam) or p.lam == 0:
        e.append("params.lambda: must be a nonzero real")
    if not _is_int(p.alpha) or p.alpha < 3 or int(p.alpha) % 2 == 0:
        e.append("params.alpha: must be an odd integer >= 3")
    if not _is_num(p.dt) or p.dt <= 0:
        e.append("params.dt: must be positive")
    elif p.dt > 0.1 and not p.allow_large_dt:
        e.append("params.dt: > 0.1 exceeds the accuracy guard (set params.allow_large_dt)")
    if not _is_num(p.t_final) or p.t_final <= 0:
        e.append("params.t_final: must be positive")
    elif _is_num(p.dt) and p.dt > 0:
        r = p.t_final / p.dt
        if abs(r - round(r)) > 1e-9 * max(1.0, r):
            e.append("params.t_final: t_final/dt must be an integer")
        elif _is_int(o.stride) and o.stride >= 1 and round(r) % int(o.stride):
            e.append("output.stride: must divide the number of steps")
    if p.scheme not in ("strang_split", "full_crank_nicolson"):
        e.append("params.scheme: must be strang_split or full_crank_nicolson")

    if d.profile not in DAMPING_PROFILES:
        e.append(f"damping.profile: must be one of {DAMPING_PROFILES}")
    if not _is_num(d.alpha0) or d.alpha0 <= 0:
        e.append("damping.alpha0: must be positive")
    if not _is_num(d.R) or d.R <= 0:
        e.append("damping.R: must be positive")
    elif _is_num(g.L) and d.R >= g.L:
        e.append(f"damping.R: must be smaller than graph.L = {g.L}")
    if d.profile == "custom_table" and not d.table:
        e.append("damping.table: required for the custom_table profile")

    if ini.kind not in INITIAL_KINDS:
        e.append(f"initial_data.kind: must be one of {INITIAL_KINDS}")
    if not _is_int(ini.seed):
        e.append("initial_data.seed: must be an integer")
    if not _is_num(ini.amplitude) or ini.amplitude < 0:
        e.append("initial_data.amplitude: must be a nonnegative number")
    if ini.kind == "custom_table" and not ini.table:
        e.append("initial_data.table: required for custom_table initial data")

    if not _is_num(a.fit_window_fraction) or not 0 <= a.fit_window_fraction < 1:
        e.append("analysis.fit_window_fraction: must lie in [0, 1)")
    if not _is_int(a.ensemble_size) or a.ensemble_size < 1:
        e.append("analysis.ensemble_size: must be a positive integer")
    if not _is_num(a.T_obs) or a.T_obs <= 0:
        e.append("analysis.T_obs: must be positive")
    elif _is_num(p.t_final) and a.T_obs > p.t_final + 1e-12:
        e.append("analysis.T_obs: must not exceed params.t_final")
    if not isinstance(a.T_sweep, list) or not all(_is_num(t) and t > 0 for t in a.T_sweep):
        e.append("analysis.T_sweep: must be a list of positive times")
    elif _is_num(p.t_final) and any(t > p.t_final + 1e-12 for t in a.T_sweep):
        e.append("analysis.T_sweep: times must not exceed params.t_final")
    if not _is_int(a.workers) or a.workers < 1:
        e.append("analysis.workers: must be a positive integer")
    pc = a.picard
    if not _is_num(pc.tol) or pc.tol <= 0:
        e.append("analysis.picard.tol: must be positive")
    if not _is_int(pc.max_iter) or pc.max_iter < 1:
        e.append("analysis.picard.max_iter: must be a positive integer")
    if not _is_num(pc.C) or pc.C <= 0:
        e.append("analysis.picard.C: must be positive")
    if not _is_num(pc.T) or pc.T <= 0:
        e.append("analysis.picard.T: must be positive")

    if not _is_int(o.stride) or o.stride < 1:
        e.append("output.stride: must be a positive integer")
    if not isinstance(o.formats, list) or any(f not in FORMATS for f in o.formats):
        e.append(f"output.formats: entries must be among {FORMATS}")
    return e


def get_path(d: dict, path: str):
    cur = d
    for part in path.split("."):
        if not isinstance(cur, dict) or part not in cur:
            raise KeyError(path)
        cur = cur[part]
    return cur


def set_path(d: dict, path: str, value) -> None:
    parts = path.split(".")
    cur = d
    for part in parts[:-1]:
        if not isinstance(cur, dict) or part not in cur:
            raise KeyError(path)
        cur = cur[part]
    if not isinstance(cur, dict) or parts[-1] not in cur:
        raise KeyError(path)
    cur[parts[-1]] = value


def numeric_path(cfg: ExperimentConfig, path: str) -> bool:
    try:
        v = get_path(cfg.to_dict(), path)
    except KeyError:
        return False
    return _is_num(v) or v is None


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads exponent floats without a dot (``1e-10``)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^[-+]?(?:[0-9][0-9_]*\.[0-9_]*|\.[0-9_]+|[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)?$
               |^[-+]?\.(?:inf|Inf|INF)$|^\.(?:nan|NaN|NAN)$""", re.X),
    list("-+0123456789."))


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    text = p.read_text()
    if not text.strip():
        raw = {}
    elif p.suffix == ".json":
        raw = json.loads(text)
    else:
        raw = yaml.load(text, Loader=_Loader)
    return ExperimentConfig.from_dict(raw)


def dump_config(cfg: ExperimentConfig, path) -> None:
    p = Path(path)
    if p.suffix == ".json":
        p.write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
    else:
        p.write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=True))
