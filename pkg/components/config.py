"""
Run configuration: one JSON document with the sections
model, hierarchy, control_grid, pilot and adaptive, plus master_seed and
threads at the top level.  Missing keys take the defaults below (the
Kuramoto study); unknown keys are rejected.
"""

import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

from modules.adaptive import AdaptiveSettings, PilotSettings
from modules.control import GridSpec
from modules.errors import ConfigurationError
from modules.mixed_difference import Hierarchy
from modules.models import ModelSpec, Observable, constant_observable, make_kuramoto, make_mollified_observable

logger = logging.getLogger(__name__)

OBSERVABLES = ("mollified", "constant")
MODES = ("adaptive", "multilevel", "single")


# === SECTIONS ===

@dataclass(frozen=True)
class ModelConfig:
    sigma: float = 0.4
    horizon: float = 1.0
    init_mean: float = 0.0
    init_variance: float = 0.2
    xi_halfwidth: float = 0.2
    coupling: float = 1.0
    K: float = 3.5
    observable: str = "mollified"
    constant_value: float = 1.0


@dataclass(frozen=True)
class HierarchyConfig:
    P0: int = 5
    N0: int = 4
    tau: int = 2


@dataclass(frozen=True)
class ControlGridConfig:
    x_min: float = -8.0
    x_max: float = 8.0
    n_cells: int = 800
    n_tsteps: int = 200
    clip: float = 10.0
    floor: float = 1e-12
    law_particles: int = 1000
    law_steps: int = 100


@dataclass(frozen=True)
class PilotConfig:
    mean_samples: Tuple[int, int] = (1000, 100)
    variance_samples: Tuple[int, int] = (25, 100)
    rate_samples: Tuple[int, int] = (100, 1000)
    axis_range: int = 4
    fit_first_level: int = 1


@dataclass(frozen=True)
class AdaptiveConfig:
    mode: str = "adaptive"
    tol_r: float = 0.05
    theta: float = 0.5
    nu: float = 0.05
    L0: float = 2.0
    growth: float = math.exp(0.25)
    max_model_cost: float = 1e12
    max_iterations: int = 60
    antithetic: bool = True
    single_P: int = 40
    single_N: int = 32
    single_M1: int = 1000
    single_M2: int = 100


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    hierarchy: HierarchyConfig = field(default_factory=HierarchyConfig)
    control_grid: ControlGridConfig = field(default_factory=ControlGridConfig)
    pilot: PilotConfig = field(default_factory=PilotConfig)
    adaptive: AdaptiveConfig = field(default_factory=AdaptiveConfig)
    master_seed: int = 0
    threads: int = 1


SECTIONS = {
    "model": ModelConfig,
    "hierarchy": HierarchyConfig,
    "control_grid": ControlGridConfig,
    "pilot": PilotConfig,
    "adaptive": AdaptiveConfig,
}

# CLI flag -> (section, key); section None means top level
OVERRIDES = {
    "seed": (None, "master_seed"),
    "threads": (None, "threads"),
    "tol": ("adaptive", "tol_r"),
    "theta": ("adaptive", "theta"),
    "nu": ("adaptive", "nu"),
    "mode": ("adaptive", "mode"),
    "K": ("model", "K"),
    "coupling": ("model", "coupling"),
    "observable": ("model", "observable"),
}


# === LOADING ===

def _section_from_dict(cls, name: str, data: Mapping):
    if not isinstance(data, Mapping):
        raise ConfigurationError(f"config section '{name}' must be an object")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigurationError(f"unknown keys in section '{name}': {unknown}")
    values = {}
    for key, value in data.items():
        default = getattr(cls(), key)
        if isinstance(default, tuple):
            value = tuple(value)
        values[key] = value
    return cls(**values)


def config_from_dict(data: Mapping) -> RunConfig:
    unknown = sorted(set(data) - set(SECTIONS) - {"master_seed", "threads"})
    if unknown:
        raise ConfigurationError(f"unknown top-level config keys: {unknown}")
    kwargs: Dict[str, Any] = {
        name: _section_from_dict(cls, name, data.get(name, {})) for name, cls in SECTIONS.items()
    }
    if "master_seed" in data:
        kwargs["master_seed"] = int(data["master_seed"])
    if "threads" in data:
        kwargs["threads"] = int(data["threads"])
    return RunConfig(**kwargs)


def load_config(path: Optional[Union[str, Path]] = None) -> RunConfig:
    """Read a JSON config; no path gives the defaults"""
    if path is None:
        return RunConfig()
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigurationError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config file {path} is not valid JSON: {exc}") from exc
    logger.info(f"Loaded config from {path}")
    return config_from_dict(data)


def apply_overrides(config: RunConfig, **overrides) -> RunConfig:
    """Replace config fields with the CLI flags that were given (None = not given)"""
    for flag, value in overrides.items():
        if value is None:
            continue
        if flag not in OVERRIDES:
            raise ConfigurationError(f"no config field behind override '{flag}'")
        section, key = OVERRIDES[flag]
        if section is None:
            config = replace(config, **{key: value})
        else:
            config = replace(config, **{section: replace(getattr(config, section), **{key: value})})
    return config


def config_to_dict(config: RunConfig) -> dict:
    out = asdict(config)
    for section in SECTIONS:
        for key, value in out[section].items():
            if isinstance(value, tuple):
                out[section][key] = list(value)
    return out


def config_hash(config: RunConfig) -> str:
    """SHA-256 of the canonical (sorted-key, compact) JSON of the resolved config"""
    canonical = json.dumps(config_to_dict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# === BUILDERS ===

def build_model(config: RunConfig) -> ModelSpec:
    m = config.model
    return make_kuramoto(
        sigma=m.sigma,
        horizon=m.horizon,
        init_mean=m.init_mean,
        init_sd=math.sqrt(m.init_variance),
        xi_halfwidth=m.xi_halfwidth,
        coupling=m.coupling,
    )


def build_observable(config: RunConfig) -> Observable:
    m = config.model
    if m.observable == "constant":
        return constant_observable(m.constant_value)
    if m.observable == "mollified":
        return make_mollified_observable(m.K)
    raise ConfigurationError(f"unknown observable '{m.observable}', expected one of {OBSERVABLES}")


def build_hierarchy(config: RunConfig) -> Hierarchy:
    h = config.hierarchy
    return Hierarchy(P0=h.P0, N0=h.N0, tau=h.tau)


def build_grid(config: RunConfig) -> GridSpec:
    g = config.control_grid
    return GridSpec(x_min=g.x_min, x_max=g.x_max, n_cells=g.n_cells, n_tsteps=g.n_tsteps)


def build_pilot_settings(config: RunConfig) -> PilotSettings:
    p = config.pilot
    return PilotSettings(mean_samples=tuple(p.mean_samples), variance_samples=tuple(p.variance_samples))


def build_adaptive_settings(config: RunConfig) -> AdaptiveSettings:
    a = config.adaptive
    return AdaptiveSettings(
        L0=a.L0,
        growth=a.growth,
        max_model_cost=a.max_model_cost,
        max_iterations=a.max_iterations,
        antithetic=a.antithetic,
    )
