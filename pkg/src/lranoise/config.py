"""Experiment configuration: JSON-serializable, schema-versioned."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

from .geometry import GridSpec, LocalPatch, build_grid
from .noise import VarianceField, make_sigma2_product

SCHEMA_VERSION = 1

_DEFAULT_X0 = (math.sqrt(2.0) / 4.0, math.sqrt(3.0) / 4.0)
_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_DEFAULT_OFFSETS = ((0.0, 0.0), (0.5 * _INV_SQRT2, 0.5 * _INV_SQRT2))


class ConfigError(ValueError):
    """Raised for structurally invalid or inconsistent configurations."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one simulation / validation run.

    Exactly one of epsilon or j_m must be set; j_m is the detector count
    per unit half-width, epsilon = 1 / j_m.
    """

    epsilon: float = None
    j_m: int = None
    kappa: float = 2.0 * math.pi
    radius: float = 1.0
    x0: tuple = _DEFAULT_X0
    offsets: tuple = _DEFAULT_OFFSETS
    distribution: str = "uniform"
    variance: dict = field(
        default_factory=lambda: {"kind": "product-sinusoidal", "params": []}
    )
    n_samples: int = 10000
    master_seed: int = 0
    window: float = 24.0
    bins: int = 20
    convention: str = "full-turn"
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if (self.epsilon is None) == (self.j_m is None):
            raise ConfigError("exactly one of epsilon or j_m must be given")
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(
                f"unsupported schema version {self.schema_version}"
            )
        if self.distribution not in ("uniform", "gaussian"):
            raise ConfigError(f"unknown distribution {self.distribution!r}")
        if self.n_samples < 2:
            raise ConfigError("n_samples must be at least 2")
        if self.kappa * self.effective_epsilon > math.pi / 4.0:
            raise ConfigError(
                "angular step kappa * epsilon exceeds pi/4; the grid is "
                "too coarse"
            )

    @property
    def effective_epsilon(self) -> float:
        return self.epsilon if self.epsilon is not None else 1.0 / self.j_m

    def grid(self) -> GridSpec:
        return build_grid(
            epsilon=self.effective_epsilon,
            kappa=self.kappa,
            radius=self.radius,
            convention=self.convention,
        )

    def patch(self) -> LocalPatch:
        return LocalPatch(
            x0=tuple(self.x0),
            offsets=tuple(tuple(o) for o in self.offsets),
            epsilon=self.effective_epsilon,
        )

    def variance_field(self) -> VarianceField:
        return VarianceField.from_dict(self.variance)

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "epsilon": self.epsilon,
            "j_m": self.j_m,
            "kappa": self.kappa,
            "radius": self.radius,
            "x0": list(self.x0),
            "offsets": [list(o) for o in self.offsets],
            "distribution": self.distribution,
            "variance": dict(self.variance),
            "n_samples": self.n_samples,
            "master_seed": self.master_seed,
            "window": self.window,
            "bins": self.bins,
            "convention": self.convention,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        known = {
            "schema_version", "epsilon", "j_m", "kappa", "radius", "x0",
            "offsets", "distribution", "variance", "n_samples",
            "master_seed", "window", "bins", "convention",
        }
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys {sorted(unknown)}")
        if "x0" in doc:
            doc["x0"] = tuple(doc["x0"])
        if "offsets" in doc:
            doc["offsets"] = tuple(tuple(o) for o in doc["offsets"])
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("configuration must be a JSON object")
        return cls.from_dict(doc)

    def with_overrides(self, **kwargs) -> "ExperimentConfig":
        return replace(self, **kwargs)


def default_config() -> ExperimentConfig:
    """The reference experiment: j_m = 1000, two offsets half a unit apart."""
    return ExperimentConfig(j_m=1000)
