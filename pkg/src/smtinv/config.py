"""Run configuration, defaults and the figure presets.

A configuration is resolved in layers: built-in defaults, then an
optional preset, then a JSON config file, then command-line overrides.
The resolved record is echoed in full in every report.
"""

from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .forward import DEFAULT_QUAD_ORDER
from .inversion import ANALYTIC_DIMS, GAP_REL_THRESHOLD
from .numerics import parse_diff_method
from .phantoms import REGISTRY


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass
class RunConfig:
    dim: int = 3
    mode: str = "radial"
    q_max: int = 2
    phantom: str = "gaussian"
    phantom_params: dict = field(default_factory=dict)
    tmin: float = 0.05
    tmax: float = 0.99
    nodes: int = 300
    quad_order: int = DEFAULT_QUAD_ORDER
    diff: str = "polyfit"
    eps: float | None = None
    eps_prime: str | float = "auto"
    gap_threshold: float = GAP_REL_THRESHOLD
    noise: float = 0.0
    seed: int = 0
    method: str = "ode"
    intervals: list = field(default_factory=lambda: [[0.3, 0.95]])
    near_origin: float = 0.3
    sphere: list | None = None
    out: str = "smtinv-out"
    preset: str | None = None

    # ------------------------------------------------------------------
    @property
    def k(self) -> int:
        return (self.dim - 3) // 2

    def highest_derivative(self) -> int:
        """Order of the highest data derivative the inversion needs."""
        q = self.q_max if self.mode == "modes" else 0
        return q + 2 * self.k + 1

    def validate(self) -> "RunConfig":
        if not isinstance(self.dim, int) or self.dim < 3 or self.dim % 2 == 0:
            raise ConfigError(f"dim must be an odd integer >= 3, got {self.dim}")
        if self.mode not in ("radial", "modes"):
            raise ConfigError(f"mode must be 'radial' or 'modes', got {self.mode!r}")
        if self.mode == "modes":
            if self.dim != 3:
                raise ConfigError("the spherical-harmonic pipeline supports dim = 3 only")
            if self.q_max < 0:
                raise ConfigError("q_max must be >= 0")
        if self.phantom not in REGISTRY:
            raise ConfigError(f"unknown phantom {self.phantom!r}; choose from {sorted(REGISTRY)}")
        is_modes = self.phantom == "two-mode"
        if is_modes != (self.mode == "modes"):
            raise ConfigError(f"phantom {self.phantom!r} does not fit mode {self.mode!r}")
        if not 0 < self.tmin < self.tmax < 1:
            raise ConfigError(f"need 0 < tmin < tmax < 1, got tmin={self.tmin}, tmax={self.tmax}")
        need = 10 * self.highest_derivative()
        if self.nodes < need:
            raise ConfigError(
                f"{self.nodes} nodes cannot support derivatives of order "
                f"{self.highest_derivative()}; need at least {need}"
            )
        if self.quad_order < 1:
            raise ConfigError("quad_order must be >= 1")
        try:
            parse_diff_method(self.diff)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.eps is not None and not 0 < self.eps < 1:
            raise ConfigError(f"eps must lie in (0, 1), got {self.eps}")
        if self.eps is not None and 1 - self.eps > self.tmax + 1e-12:
            raise ConfigError(f"eps={self.eps} needs data up to t={1 - self.eps}, grid ends at {self.tmax}")
        if self.eps_prime != "auto":
            try:
                val = float(self.eps_prime)
            except (TypeError, ValueError):
                raise ConfigError(f"eps_prime must be 'auto' or a number, got {self.eps_prime!r}") from None
            if not 0 < val < 1:
                raise ConfigError(f"eps_prime must lie in (0, 1), got {val}")
            self.eps_prime = val
        if self.gap_threshold <= 0:
            raise ConfigError("gap_threshold must be positive")
        if self.noise < 0:
            raise ConfigError("noise amplitude must be >= 0")
        if self.method not in ("ode", "analytic"):
            raise ConfigError(f"method must be 'ode' or 'analytic', got {self.method!r}")
        if self.method == "analytic":
            if self.mode == "modes":
                raise ConfigError("the analytic back-end handles radial data only")
            if self.dim not in ANALYTIC_DIMS:
                raise ConfigError("analytic back-end available only for n ∈ {3,5,7}")
        if not self.intervals:
            raise ConfigError("at least one metrics interval is required")
        for iv in self.intervals:
            if len(iv) != 2 or not 0 <= iv[0] < iv[1] <= 1:
                raise ConfigError(f"invalid metrics interval {iv}")
        if not 0 < self.near_origin < 1:
            raise ConfigError("near_origin must lie in (0, 1)")
        if self.sphere is not None and (len(self.sphere) != 2 or min(self.sphere) < 1):
            raise ConfigError(f"sphere must be [n_theta, n_phi], got {self.sphere}")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


_FIELDS = {f.name for f in fields(RunConfig)}

# Grids follow the figure captions. The experiments that run up to t = 1
# stop at 1 - 1e-4 because the data grid must stay inside (0, 1).
PRESETS: dict[str, dict] = {
    "fig1": dict(dim=3, phantom="gaussian", phantom_params={"center": 0.5},
                 tmin=0.0001, tmax=0.9999, nodes=150, intervals=[[0.05, 0.95]]),
    "fig2": dict(dim=3, phantom="bump", phantom_params={"a": 0.3, "b": 0.6},
                 tmin=0.001, tmax=0.9999, nodes=100, intervals=[[0.05, 0.95], [0.35, 0.55]]),
    "fig3": dict(dim=5, phantom="gaussian", phantom_params={"center": 0.6},
                 tmin=0.05, tmax=0.99, nodes=300, intervals=[[0.3, 0.95]]),
    "fig4": dict(dim=5, phantom="triangle", tmin=0.15, tmax=0.95, nodes=100,
                 intervals=[[0.3, 0.95]]),
    "fig5": dict(dim=5, phantom="bump", phantom_params={"a": 0.3, "b": 0.6},
                 tmin=0.1, tmax=0.95, nodes=100, intervals=[[0.2, 0.95]]),
    "fig6": dict(dim=5, phantom="gaussian", phantom_params={"center": 0.5}, method="analytic",
                 tmin=0.03, tmax=0.9999, nodes=150, intervals=[[0.3, 0.95]]),
    "fig7": dict(dim=7, phantom="gaussian", phantom_params={"center": 0.6},
                 tmin=0.15, tmax=0.95, nodes=300, intervals=[[0.4, 0.9]]),
    "fig8": dict(dim=3, mode="modes", q_max=2, phantom="two-mode", tmin=0.01, tmax=0.99,
                 nodes=300, intervals=[[0.2, 0.9]]),
    "fig9": dict(dim=5, phantom="gaussian", phantom_params={"center": 0.6}, noise=1e-7, seed=1,
                 tmin=0.15, tmax=0.95, nodes=100, intervals=[[0.4, 0.9]]),
}


def defaults() -> dict:
    return RunConfig().to_dict()


def load_config_file(path) -> dict:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return data


def resolve(preset: str | None = None, file_values: dict | None = None,
            overrides: dict | None = None) -> RunConfig:
    """Merge defaults < preset < config file < overrides and validate.

    A ``preset`` key inside the config file is honoured unless a preset is
    given explicitly.
    """
    merged = defaults()
    file_values = dict(file_values or {})
    preset = preset or file_values.get("preset")
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        merged.update(copy.deepcopy(PRESETS[preset]))
        merged["preset"] = preset
    for layer in (file_values, overrides or {}):
        unknown = set(layer) - _FIELDS
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        for key, val in layer.items():
            if val is None and key not in ("eps", "sphere", "preset"):
                continue
            if key == "phantom_params":
                merged[key] = {**merged[key], **val}
            else:
                merged[key] = copy.deepcopy(val)
    if overrides and "phantom" in overrides and "phantom_params" not in overrides:
        # switching phantoms drops the preset's parameters for the old one
        if preset is None or overrides["phantom"] != PRESETS[preset].get("phantom"):
            merged["phantom_params"] = dict(file_values.get("phantom_params", {}))
    try:
        cfg = RunConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()
