"""Run configuration: every module's settings in one JSON document.

Unknown keys are rejected at every level. Sampler and correction sections
default to the profile matching ``noise_sigma``; keys given explicitly
override that profile.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .bfif import SamplerConfig
from .correction import CorrectionConfig
from .kde import KdeConfig
from .oracles import OracleConfig
from .planner import PlannerConfig
from .scene import GeneratorConfig, PushConfig

_SECTIONS = {
    "planner": PlannerConfig,
    "sampler": SamplerConfig,
    "correction": CorrectionConfig,
    "oracle": OracleConfig,
    "push": PushConfig,
    "generator": GeneratorConfig,
    "kde": KdeConfig,
}
_SCALARS = ("noise_sigma", "max_pushes", "master_seed", "tau", "twist_method", "boundary_tol_px")


@dataclass(frozen=True)
class RunConfig:
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    sampler: SamplerConfig = field(default_factory=lambda: SamplerConfig.for_noise(0.3))
    correction: CorrectionConfig = field(default_factory=lambda: CorrectionConfig.for_noise(0.3))
    oracle: OracleConfig = field(default_factory=OracleConfig)
    push: PushConfig = field(default_factory=PushConfig)
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    kde: KdeConfig = field(default_factory=KdeConfig)
    noise_sigma: float = 0.3
    max_pushes: int = 3
    master_seed: int = 0
    tau: float = 0.5
    twist_method: str = "log"
    boundary_tol_px: int = 1

    def __post_init__(self):
        if self.max_pushes < 0:
            raise ValueError("max_pushes must be non-negative")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if not 0 < self.tau < 1:
            raise ValueError("tau must lie in (0, 1)")
        if self.twist_method not in ("log", "fd"):
            raise ValueError("twist_method must be 'log' or 'fd'")

    @classmethod
    def from_dict(cls, d: dict | None = None, **overrides) -> "RunConfig":
        """Build from a (possibly partial) nested dict; ``overrides`` set top-level scalars."""
        d = dict(d or {})
        d.update({k: v for k, v in overrides.items() if v is not None})
        unknown = set(d) - set(_SECTIONS) - set(_SCALARS)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        scalars = {k: d[k] for k in _SCALARS if k in d}
        sigma = float(scalars.get("noise_sigma", cls.noise_sigma))
        sections = {}
        for name, klass in _SECTIONS.items():
            given = dict(d.get(name) or {})
            names = {f.name for f in dataclasses.fields(klass)}
            bad = set(given) - names
            if bad:
                raise ValueError(f"unknown keys in '{name}': {sorted(bad)}")
            for k, v in given.items():
                if isinstance(v, list):
                    given[k] = tuple(v)
            if name in ("sampler", "correction"):
                sections[name] = klass.for_noise(sigma, **given)
            else:
                sections[name] = klass(**given)
        return cls(**sections, **scalars)

    def to_dict(self) -> dict:
        return json.loads(json.dumps(dataclasses.asdict(self)))

    def replace(self, **changes) -> "RunConfig":
        """Copy with new top-level values; noise changes re-derive untouched noise profiles."""
        d = self.to_dict()
        if "noise_sigma" in changes and changes["noise_sigma"] != self.noise_sigma:
            for name, klass in (("sampler", SamplerConfig), ("correction", CorrectionConfig)):
                if getattr(self, name) == klass.for_noise(self.noise_sigma):
                    d.pop(name)
        d.update(changes)
        return RunConfig.from_dict(d)


def load_config(path) -> RunConfig:
    return RunConfig.from_dict(json.loads(Path(path).read_text()))


def save_config(path, cfg: RunConfig) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=1, sort_keys=True) + "\n")
