"""Experiment configuration: flat key-value sections, env overrides.

The file format is INI-style (configparser), diff-friendly and free of
schema machinery.  Every key can be overridden by an environment variable
``STRIPWAVES_<SECTION>_<KEY>`` (or ``STRIPWAVES_<KEY>`` for the
[experiment] section) and by the CLI flags.
"""

import configparser
import os
from dataclasses import dataclass, field as dc_field

from .recipes import RECIPES

ENV_PREFIX = "STRIPWAVES_"


class ConfigError(Exception):
    """Invalid or incomplete experiment configuration (CLI exit code 2)."""


PRESETS = ("dn-verify", "residual-scaling", "commutator-scaling", "evolve",
           "kp-compare", "linearized-energy", "soliton")


@dataclass
class ExperimentConfig:
    preset: str = "dn-verify"
    out: str = "runs/out"
    seed: int = 1234
    quiet: bool = False

    variant: str = "standard"
    epsilon: float = 0.1
    alpha: float = 0.5
    theta: float = 0.0
    eps_list: tuple = (0.2, 0.1, 0.05)

    Lx: float = 16 * 3.141592653589793
    Ly: float = 16 * 3.141592653589793
    Nx: int = 64
    Ny: int = 32
    Nz: int = 16

    recipe: str = "rest"
    recipe_params: dict = dc_field(default_factory=dict)

    t_final: float = 0.0          # 0 means "auto" = 1/epsilon
    cfl: float = 0.5
    dt: float = 0.0
    h_floor: float = 0.1
    monitor_every: int = 1
    dealias: bool = True

    tol_ell: float = 1e-10

    def validate(self):
        if self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}; "
                              f"choose from {PRESETS}")
        if self.recipe not in RECIPES:
            raise ConfigError(f"unknown initial-data recipe {self.recipe!r}")
        if self.variant not in ("standard", "degenerate", "general"):
            raise ConfigError(f"unknown variant {self.variant!r}")
        if not (0 < self.epsilon <= 1):
            raise ConfigError("epsilon must be in (0, 1]")
        if self.alpha <= 0:
            raise ConfigError("alpha must be positive")
        if self.Nx % 2 or self.Ny % 2 or self.Nx < 8 or self.Ny < 8:
            raise ConfigError("Nx, Ny must be even and >= 8")
        if self.Nz < 4:
            raise ConfigError("Nz must be >= 4")
        if any(e <= 0 or e > 1 for e in self.eps_list):
            raise ConfigError("eps list entries must be in (0, 1]")
        return self


_PI = 3.141592653589793

# Acceptance-grade settings applied when a key is not set explicitly.
PRESET_DEFAULTS = {
    "evolve": {"recipe": "gaussian_bump", "epsilon": 0.1, "alpha": 0.5,
               "Lx": 32 * _PI, "Ly": 32 * _PI, "Nx": 128, "Ny": 64,
               "Nz": 12, "dt": 0.1,
               "recipe_params": {"amplitude": 0.5}},
    "kp-compare": {"recipe": "kp_packet", "alpha": 0.1,
                   "Lx": 32 * _PI, "Ly": 32 * _PI, "Nx": 128, "Ny": 64,
                   "Nz": 12, "dt": 0.2,
                   "recipe_params": {"amplitude": 0.25}},
    "residual-scaling": {"Nx": 64, "Ny": 32, "Nz": 16},
    "commutator-scaling": {"Nx": 64, "Ny": 32, "Nz": 16},
}

_FLOAT_KEYS = {"epsilon", "alpha", "theta", "Lx", "Ly", "t_final", "cfl",
               "dt", "h_floor", "tol_ell"}
_INT_KEYS = {"seed", "Nx", "Ny", "Nz", "monitor_every"}
_BOOL_KEYS = {"quiet", "dealias"}


def _coerce(key, raw):
    try:
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _INT_KEYS:
            return int(raw)
        if key in _BOOL_KEYS:
            return str(raw).strip().lower() in ("1", "true", "yes", "on")
        if key == "eps_list":
            return tuple(float(tok) for tok in str(raw).split(",") if tok)
        return raw
    except ValueError as exc:
        raise ConfigError(f"cannot parse {key} = {raw!r}: {exc}")


def load_config(path=None, overrides=None):
    """Build an ExperimentConfig from an INI file, the environment and
    explicit overrides (in increasing priority); keys that nothing set
    explicitly fall back to the preset's acceptance-grade defaults."""
    explicit = {}
    recipe_params = {}
    canonical = {name.lower(): name
                 for name in ExperimentConfig.__dataclass_fields__}
    if path is not None:
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise ConfigError(f"cannot read config file {path}")
        for section in parser.sections():
            for key, raw in parser.items(section):
                if section == "initial" and key != "recipe":
                    recipe_params[key] = _coerce_recipe_value(raw)
                    continue
                if key not in canonical:
                    raise ConfigError(
                        f"unknown key {key!r} in section [{section}]")
                name = canonical[key]
                explicit[name] = _coerce(name, raw)
    for key in ExperimentConfig.__dataclass_fields__:
        env = os.environ.get(ENV_PREFIX + key.upper())
        if env is not None:
            explicit[key] = _coerce(key, env)
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key not in ExperimentConfig.__dataclass_fields__:
            raise ConfigError(f"unknown override {key!r}")
        explicit[key] = _coerce(key, val) if isinstance(val, str) else val

    cfg = ExperimentConfig()
    preset = explicit.get("preset", cfg.preset)
    for key, val in PRESET_DEFAULTS.get(preset, {}).items():
        if key == "recipe_params":
            cfg.recipe_params.update(val)
        else:
            setattr(cfg, key, val)
    cfg.recipe_params.update(recipe_params)
    for key, val in explicit.items():
        setattr(cfg, key, val)
    return cfg.validate()


def _coerce_recipe_value(raw):
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw
