"""Run configuration: a JSON-compatible dict, schema-checked into a dataclass."""

from __future__ import annotations

from dataclasses import dataclass, fields

_MODES = ("curves", "verify", "charfn", "montecarlo", "density", "decomp")
_BUILTIN_SPECS = ("gaussian", "uniform", "laplace", "mixture", "spike")


class ConfigError(ValueError):
    """Invalid run configuration."""


@dataclass(frozen=True)
class RunConfig:
    mode: str = "verify"
    specs: tuple = _BUILTIN_SPECS
    spec_parameters: tuple = ()
    n_max: int = 64
    n_list: tuple = (1, 2, 4, 8, 16, 32, 64)
    grid_points: int = 2**14
    half_width_factor: float = 8.0
    sigma_pad: float = 1.25
    decomposition_M: float | None = None
    t_window: float = 3.0
    mc_samples: int = 100_000
    seed: int = 20260809
    out_dir: str = "out"
    threads: int = 1

    def __post_init__(self) -> None:
        if self.mode not in _MODES:
            raise ConfigError(f"mode must be one of {_MODES}, got {self.mode!r}")
        if isinstance(self.specs, str):
            object.__setattr__(self, "specs", (self.specs,))
        object.__setattr__(self, "specs", tuple(self.specs))
        for name in self.specs:
            if name not in _BUILTIN_SPECS:
                raise ConfigError(f"unknown spec {name!r}; choose from {_BUILTIN_SPECS}")
        if not self.specs:
            raise ConfigError("at least one spec is required")
        object.__setattr__(self, "spec_parameters", tuple(self.spec_parameters))
        if self.n_max < 1:
            raise ConfigError(f"n_max must be >= 1, got {self.n_max}")
        n_list = tuple(self.n_list)
        if not n_list:
            raise ConfigError("n_list must not be empty")
        for n in n_list:
            if not isinstance(n, int) or isinstance(n, bool) or not 1 <= n <= self.n_max:
                raise ConfigError(f"n_list entries must be integers in [1, n_max]; got {n!r}")
        object.__setattr__(self, "n_list", tuple(sorted(set(n_list))))
        p = self.grid_points
        if p & (p - 1) or not 2**12 <= p <= 2**20:
            raise ConfigError(
                f"grid_points must be a power of two in [2^12, 2^20], got {p}"
            )
        if self.decomposition_M is not None and self.decomposition_M <= 0:
            raise ConfigError("decomposition_M must be positive when given")
        if self.t_window <= 0:
            raise ConfigError("t_window must be positive")
        if self.mc_samples < 10**4:
            raise ConfigError(f"mc_samples must be >= 1e4, got {self.mc_samples}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError("seed must be an integer")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        coerced = dict(data)
        for key in ("specs", "n_list", "spec_parameters"):
            if key in coerced and isinstance(coerced[key], list):
                coerced[key] = tuple(coerced[key])
        try:
            return cls(**coerced)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
