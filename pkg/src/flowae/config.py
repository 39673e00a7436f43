"""Pipeline configuration: one JSON file with per-stage sections.

Every key has a default, so an empty file is a valid config; unknown keys
are rejected to catch typos. The effective config (defaults materialized)
is written next to the artifacts of every run, and reloading it reproduces
the run exactly.
"""

import dataclasses
from dataclasses import dataclass

from .autoencoder import AeConfig
from .errors import ConfigError
from .ioutil import read_json, write_json
from .sgns import SgnsConfig


@dataclass(frozen=True)
class PathsConfig:
    corpus: str | None = None
    schema: str | None = None
    train: str | None = None
    test: str | None = None
    out: str = "out"


@dataclass(frozen=True)
class SplitConfig:
    test_fraction: float = 0.2
    seed: int = 7

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError("test_fraction must be in (0, 1)")


@dataclass(frozen=True)
class DiscretizerConfig:
    n_bins: int = 10

    def __post_init__(self):
        if self.n_bins < 2:
            raise ConfigError("n_bins must be >= 2")


@dataclass(frozen=True)
class EvaluateConfig:
    # classes None -> evaluate every non-benign label found in the test set
    classes: tuple | None = None
    n_buckets: int = 50

    def __post_init__(self):
        if self.classes is not None:
            object.__setattr__(self, "classes", tuple(self.classes))
        if self.n_buckets < 1:
            raise ConfigError("n_buckets must be >= 1")


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    poison_fraction: float
    seed: int | None = None

    def __post_init__(self):
        if not self.name:
            raise ConfigError("scenario name must be non-empty")
        if not 0.0 <= self.poison_fraction < 0.5:
            raise ConfigError("poison_fraction must be in [0, 0.5)")


@dataclass(frozen=True)
class ExperimentConfig:
    scenarios: tuple = ()
    poison_class: str = "exploits"
    train_size: int | None = None
    seed: int = 11

    def __post_init__(self):
        scenarios = tuple(
            s if isinstance(s, ScenarioConfig) else _build(ScenarioConfig, s, "scenario")
            for s in self.scenarios
        )
        object.__setattr__(self, "scenarios", scenarios)
        names = [s.name for s in scenarios]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate scenario names in {names}")


@dataclass(frozen=True)
class PipelineConfig:
    paths: PathsConfig = PathsConfig()
    split: SplitConfig = SplitConfig()
    discretizer: DiscretizerConfig = DiscretizerConfig()
    sgns: SgnsConfig = SgnsConfig()
    ae: AeConfig = AeConfig()
    evaluate: EvaluateConfig = EvaluateConfig()
    experiment: ExperimentConfig = ExperimentConfig()
    seed: int | None = None


_SECTIONS = {
    "paths": PathsConfig,
    "split": SplitConfig,
    "discretizer": DiscretizerConfig,
    "sgns": SgnsConfig,
    "ae": AeConfig,
    "evaluate": EvaluateConfig,
    "experiment": ExperimentConfig,
}


def _build(cls, data, section):
    if not isinstance(data, dict):
        raise ConfigError(f"{section} section must be an object, got {type(data).__name__}")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in {section}: {sorted(unknown)}")
    return cls(**data)


def config_from_dict(data):
    unknown = set(data) - set(_SECTIONS) - {"seed"}
    if unknown:
        raise ConfigError(f"unknown config section(s): {sorted(unknown)}")
    sections = {
        name: _build(cls, data.get(name, {}), name) for name, cls in _SECTIONS.items()
    }
    config = PipelineConfig(seed=data.get("seed"), **sections)
    if config.seed is not None:
        config = apply_seed(config, config.seed)
    return config


def apply_seed(config, seed):
    """Derive every stage seed from one master seed.

    sgns gets seed, ae seed+1, the benign split seed+2, the experiment's
    poison draws seed+3. Used by the --seed flag for multi-seed sweeps.
    """
    seed = int(seed)
    return dataclasses.replace(
        config,
        seed=seed,
        sgns=dataclasses.replace(config.sgns, seed=seed),
        ae=dataclasses.replace(config.ae, seed=seed + 1),
        split=dataclasses.replace(config.split, seed=seed + 2),
        experiment=dataclasses.replace(config.experiment, seed=seed + 3),
    )


def config_to_dict(config):
    data = {name: dataclasses.asdict(getattr(config, name)) for name in _SECTIONS}
    data["experiment"]["scenarios"] = [
        dataclasses.asdict(s) for s in config.experiment.scenarios
    ]
    if config.evaluate.classes is not None:
        data["evaluate"]["classes"] = list(config.evaluate.classes)
    if config.seed is not None:
        data["seed"] = config.seed
    return data


def load_config(path):
    data = read_json(path)
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be a JSON object: {path}")
    return config_from_dict(data)


def save_config(path, config):
    write_json(path, config_to_dict(config))
