"""TOML configuration for the experiment harness.

A config file fully determines an experiment run: model coefficients,
covariance, noise coefficient, solver discretization, seed, and one options
block per experiment.  Missing keys fall back to the defaults below, and
unknown keys are rejected so typos fail loudly rather than silently running
the default.  The canonical JSON serialization of the merged config is
hashed to name the output directory.
"""

from __future__ import annotations

import copy
import hashlib
import json
try:
    import tomllib
except ModuleNotFoundError:  # < 3.11
    import tomli as tomllib

import numpy as np

from .noise import AdditiveNoise, CovarianceSpec, MultiplicativeNoise
from .params import ModelParams
from .solver import SolverConfig
from .spectral import SpectralField, grid_to_coeffs, interior_grid

DEFAULTS: dict = {
    "model": {
        "nu": 1.0,
        "alpha": 1.0,
        "beta": 0.5,
        "gamma": 0.5,
        "embedding_const": 1.0 / np.sqrt(2.0),
    },
    "covariance": {
        "kind": "power-law",   # or "explicit" with mus = [...]
        "n_modes": 16,
        "exponent": 2.0,
        "scale": 1.0,
        "mus": [],
    },
    "noise": {
        "kind": "additive",    # or "multiplicative"
        "a0": 0.3,
        "c0": 0.3,
        "c1": 0.2,
    },
    "solver": {
        "n_modes": 16,
        "dt": 1e-3,
        "t_end": 1.0,
        "scheme": "semi-implicit",
        "blowup_threshold": 1e6,
    },
    "initial": {
        "kind": "bump",        # bump | mode | zero
        "amplitude": 1.0,
        "mode": 1,
    },
    "run": {
        "base_seed": 0,
        "workers": 0,          # 0: take BHLAB_WORKERS or 1
    },
    "simulate": {
        "include_coeffs": False,
        "binary": False,
    },
    "energy": {
        "n_paths": 200,
        "t_end": 1.0,
        "moment_order": 2,
    },
    "uniqueness": {
        "n_paths": 200,
        "t_end": 1.0,
        "n_checkpoints": 5,
        "v0_amplitude": 0.0,
    },
    "inviscid": {
        "values": [0.4, 0.2, 0.1, 0.05],
        "n_paths": 100,
        "t_end": 1.0,
        "sweeps": ["beta", "alpha"],
    },
    "exit_tail": {
        "r_values": [0.38, 0.40, 0.42],
        "n_paths": 10000,
        "t_end": 1.0,
        "n_modes": 8,
        "initial_amplitude": 0.5,
    },
    "moments": {
        "epsilon": 0.0,        # 0: use the admissible cap
        "n_paths": 500,
        "t_end": 1.0,
        "n_checkpoints": 5,
    },
    "stability": {
        "n_paths": 200,
        "t_end": 2.0,
        "n_checkpoints": 5,
        "v0_amplitude": -0.5,
    },
    "invariant": {
        "n_samples": 400,
        "n_paths": 400,
        "sample_stride": 0.25,
        "burn_in": 0.0,        # 0: derive from the decay rate
        "distant_norm": 5.0,
    },
    "ldp_rate": {
        "r_exit": 1.0,
        "t_end": 1.0,
        "budget": 2500,
        "n_intervals": 16,
        "n_support_modes": 1,
        "n_modes": 8,
        "dt": 1e-3,
    },
    "ldp_scaling": {
        "eps_values": [0.5, 0.25, 0.125],
        "r_exit": 1.0,
        "t_end": 1.0,
        "n_paths": 4000,
        "n_modes": 8,
        "dt": 1e-3,
        "j_hat": 0.0,          # 0: no upper-bound comparison (or run ldp-rate first)
    },
}


class ConfigError(ValueError):
    """Raised when a config file fails to parse or validate."""


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        here = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key: {here}")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"{here} must be a table")
            out[key] = _merge(base[key], val, here)
        else:
            out[key] = val
    return out


def load_config(path: str | None = None) -> dict:
    """Defaults merged with the TOML file at path (if given) and validated."""
    merged = copy.deepcopy(DEFAULTS)
    if path is not None:
        with open(path, "rb") as fh:
            try:
                user = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"config does not parse as TOML: {exc}") from exc
        merged = _merge(DEFAULTS, user)
    validate(merged)
    return merged


def validate(cfg: dict) -> None:
    m = cfg["model"]
    if m["nu"] <= 0:
        raise ConfigError("model.nu must be positive")
    if m["beta"] < 0 or m["alpha"] < 0:
        raise ConfigError("model.alpha and model.beta must be nonnegative")
    c = cfg["covariance"]
    if c["kind"] not in ("power-law", "explicit"):
        raise ConfigError("covariance.kind must be 'power-law' or 'explicit'")
    if c["kind"] == "explicit" and len(c["mus"]) == 0:
        raise ConfigError("covariance.kind='explicit' requires covariance.mus")
    if cfg["noise"]["kind"] not in ("additive", "multiplicative"):
        raise ConfigError("noise.kind must be 'additive' or 'multiplicative'")
    s = cfg["solver"]
    if s["dt"] <= 0 or s["t_end"] <= 0 or s["n_modes"] < 1:
        raise ConfigError("solver.dt, solver.t_end, solver.n_modes must be positive")
    if s["scheme"] not in ("semi-implicit", "tamed"):
        raise ConfigError("solver.scheme must be 'semi-implicit' or 'tamed'")
    if cfg["initial"]["kind"] not in ("bump", "mode", "zero"):
        raise ConfigError("initial.kind must be 'bump', 'mode', or 'zero'")


def config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def default_toml() -> str:
    """Render the defaults as a TOML document (round-trips through load)."""
    lines = []
    for section, table in DEFAULTS.items():
        lines.append(f"[{section}]")
        for key, val in table.items():
            if isinstance(val, bool):
                sval = "true" if val else "false"
            elif isinstance(val, str):
                sval = f'"{val}"'
            elif isinstance(val, list):
                sval = "[" + ", ".join(
                    f'"{v}"' if isinstance(v, str) else repr(float(v))
                    for v in val) + "]"
            elif isinstance(val, int):
                sval = str(val)
            else:
                sval = repr(float(val))
            lines.append(f"{key} = {sval}")
        lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# builders


def make_params(cfg: dict) -> ModelParams:
    m = cfg["model"]
    return ModelParams(nu=m["nu"], alpha=m["alpha"], beta=m["beta"],
                       gamma=m["gamma"], embedding_const=m["embedding_const"])


def make_covariance(cfg: dict) -> CovarianceSpec:
    c = cfg["covariance"]
    if c["kind"] == "explicit":
        return CovarianceSpec(np.asarray(c["mus"], dtype=float))
    return CovarianceSpec.power_law(c["n_modes"], exponent=c["exponent"],
                                    scale=c["scale"])


def make_noise(cfg: dict):
    n = cfg["noise"]
    if n["kind"] == "additive":
        return AdditiveNoise(n["a0"])
    return MultiplicativeNoise(n["c0"], n["c1"])


def make_solver_config(cfg: dict, **overrides) -> SolverConfig:
    s = dict(cfg["solver"])
    s.update(overrides)
    return SolverConfig(n_modes=s["n_modes"], dt=s["dt"], t_end=s["t_end"],
                        scheme=s["scheme"],
                        blowup_threshold=s["blowup_threshold"])


def make_initial(cfg: dict, n_modes: int | None = None,
                 amplitude: float | None = None) -> SpectralField:
    ic = cfg["initial"]
    n = n_modes if n_modes is not None else cfg["solver"]["n_modes"]
    amp = amplitude if amplitude is not None else ic["amplitude"]
    if ic["kind"] == "zero" or amp == 0.0:
        return SpectralField.zeros(n)
    if ic["kind"] == "mode":
        coeffs = np.zeros(n)
        coeffs[int(ic["mode"]) - 1] = amp
        return SpectralField(coeffs)
    x = interior_grid(max(4 * n, 64))
    return SpectralField(grid_to_coeffs(amp * 4.0 * x * (1.0 - x)
                                        * np.sin(np.pi * x), n))