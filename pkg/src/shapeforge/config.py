"""Run configuration: a strict YAML document mapped onto the dataclasses
of the individual stages.  Unknown keys fail loudly so a typo cannot
silently change a long run, and every load produces a resolved echo
suitable for byte-identical re-runs."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError
from .evolution import GaConfig
from .neural import NetworkConfig
from .objectives import ObjectiveSpec
from .training import TrainConfig

__all__ = ["SamplingConfig", "EvalConfig", "DatasetConfig", "RunConfig",
           "load_config", "resolved_config_dict", "write_config_echo"]


@dataclass
class SamplingConfig:
    n_points: int = 15000
    seed: int = 0

    def __post_init__(self):
        if self.n_points < 100:
            raise ConfigError(f"sampling.n_points must be >= 100, got {self.n_points}")


@dataclass
class EvalConfig:
    n_points: int = 20000
    seed: int = 0

    def __post_init__(self):
        if self.n_points < 1:
            raise ConfigError(f"evaluation.n_points must be >= 1, got {self.n_points}")


@dataclass
class DatasetConfig:
    procedural: list = field(default_factory=list)
    meshes: list = field(default_factory=list)

    def __post_init__(self):
        if not self.procedural and not self.meshes:
            raise ConfigError("dataset must list procedural entries or mesh paths")


@dataclass
class RunConfig:
    dataset: DatasetConfig
    seed: int = 0
    out: str = "run"
    resolution: int = 64
    bounds_margin: float = 0.2
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    training: TrainConfig = field(default_factory=TrainConfig)
    ga: GaConfig = field(default_factory=GaConfig)
    evaluation: EvalConfig = field(default_factory=EvalConfig)
    objectives: list = field(default_factory=list)

    def __post_init__(self):
        if self.resolution < 8:
            raise ConfigError(f"resolution must be >= 8, got {self.resolution}")
        if self.bounds_margin < 0:
            raise ConfigError(f"bounds_margin must be >= 0, got {self.bounds_margin}")


def _build_dataclass(cls, data, where):
    """Instantiate ``cls`` from a mapping, rejecting unknown keys."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(data).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


_SECTION_TYPES = {
    "dataset": DatasetConfig,
    "sampling": SamplingConfig,
    "network": NetworkConfig,
    "training": TrainConfig,
    "ga": GaConfig,
    "evaluation": EvalConfig,
}

_SCALAR_KEYS = {"seed", "out", "resolution", "bounds_margin"}


def load_config(
    path,
    seed_override: int | None = None,
    out_override: str | None = None,
    bounds_margin_override: float | None = None,
    resolution_override: int | None = None,
) -> RunConfig:
    """Parse and validate a YAML run configuration.

    The top-level ``seed`` cascades into sampling/training/ga/evaluation
    sections unless those set their own; CLI overrides beat the file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")

    known = _SCALAR_KEYS | set(_SECTION_TYPES) | {"objectives"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"{path}: unknown top-level keys {sorted(unknown)}")

    seed = int(doc.get("seed", 0))
    if seed_override is not None:
        seed = int(seed_override)

    sections = {}
    for name, cls in _SECTION_TYPES.items():
        raw = doc.get(name)
        if name == "dataset":
            sections[name] = _build_dataclass(cls, raw, name)
            continue
        raw = {} if raw is None else dict(raw)
        if not isinstance(raw, dict):
            raise ConfigError(f"{name}: expected a mapping")
        if "seed" in {f.name for f in dataclasses.fields(cls)} and "seed" not in raw:
            raw["seed"] = seed
        sections[name] = _build_dataclass(cls, raw, name)

    objectives = []
    for i, entry in enumerate(doc.get("objectives") or []):
        objectives.append(_build_dataclass(ObjectiveSpec, entry, f"objectives[{i}]"))

    out = str(doc.get("out", "run"))
    if out_override is not None:
        out = str(out_override)
    bounds_margin = float(doc.get("bounds_margin", 0.2))
    if bounds_margin_override is not None:
        bounds_margin = float(bounds_margin_override)
    resolution = int(doc.get("resolution", 64))
    if resolution_override is not None:
        resolution = int(resolution_override)

    return RunConfig(
        dataset=sections["dataset"],
        seed=seed,
        out=out,
        resolution=resolution,
        bounds_margin=bounds_margin,
        sampling=sections["sampling"],
        network=sections["network"],
        training=sections["training"],
        ga=sections["ga"],
        evaluation=sections["evaluation"],
        objectives=objectives,
    )


def resolved_config_dict(cfg: RunConfig) -> dict:
    """Fully resolved configuration as plain data, ready for the echo."""
    def plain(obj):
        if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
            return {f.name: plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
        if isinstance(obj, (list, tuple)):
            return [plain(v) for v in obj]
        if isinstance(obj, dict):
            return {k: plain(v) for k, v in obj.items()}
        return obj

    return plain(cfg)


def write_config_echo(cfg: RunConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(resolved_config_dict(cfg), fh, sort_keys=True)
