import logging
import os
from pathlib import Path
from typing import Dict, Optional, Union

import yaml
from pydantic import BaseModel, NonNegativeInt, PositiveInt, ValidationError

from biomatch.errors import ConfigError
from biomatch.spaces import SpaceDescriptor, SpaceKind

logger = logging.getLogger(__name__)

ENV_CONFIG = "BIOMATCH_CONFIG"

# dotted config key -> DeploymentConfig field
DEPLOYMENT_KEYS = {
    "lambda": "lambda_bits",
    "space.kind": "space_kind",
    "space.dim": "space_dim",
    "threshold": "threshold",
    "capacity": "capacity",
    "model.path": "model_path",
    "seed": "seed",
    "state.dir": "state_dir",
}


def get_config_path():
    """Get the path to the bundled config.yaml file."""
    return Path(__file__).parent / "config.yaml"


def load_config():
    """Load the bundled defaults from YAML."""
    with open(get_config_path(), "r") as file:
        return yaml.safe_load(file)


def get_path_config():
    return load_config().get("paths", {})


def get_system_defaults():
    return load_config().get("system", {})


def get_experiment_defaults():
    return load_config().get("experiment", {})


def get_training_defaults():
    return load_config().get("training", {})


class DeploymentConfig(BaseModel):
    lambda_bits: PositiveInt
    space_kind: SpaceKind
    space_dim: PositiveInt
    threshold: float
    capacity: PositiveInt
    model_path: str
    seed: NonNegativeInt = 0
    state_dir: str

    @property
    def space(self) -> SpaceDescriptor:
        return SpaceDescriptor(kind=self.space_kind, dimension=self.space_dim)


def resolve_config_path(explicit: Optional[Union[str, Path]] = None) -> Optional[Path]:
    """``--config`` wins over ``BIOMATCH_CONFIG``; None means bundled defaults only."""
    if explicit:
        return Path(explicit)
    from_env = os.environ.get(ENV_CONFIG)
    return Path(from_env) if from_env else None


def parse_key_values(text: str) -> Dict[str, str]:
    """``key=value`` lines; blank lines and ``#`` comments are skipped."""
    from biomatch.harness.experiment import EXPERIMENT_KEYS

    known = set(DEPLOYMENT_KEYS) | set(EXPERIMENT_KEYS)
    values: Dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {number}: expected key=value, got {raw!r}")
        if key not in known:
            raise ConfigError(f"line {number}: unknown key {key!r}")
        values[key] = value
    return values


def read_key_values(path: Optional[Union[str, Path]]) -> Dict[str, str]:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    logger.debug("loaded config overrides from %s", path)
    return parse_key_values(text)


def _overrides(values: Dict[str, str], keys: Dict[str, str]) -> Dict[str, object]:
    out: Dict[str, object] = {}
    for key, field_name in keys.items():
        if key not in values:
            continue
        value: object = values[key]
        if field_name == "hidden":
            value = [int(part) for part in str(value).split(",") if part.strip()]
        out[field_name] = value
    return out


def load_deployment(path: Optional[Union[str, Path]] = None) -> DeploymentConfig:
    settings = dict(get_system_defaults())
    settings.setdefault("state_dir", get_path_config().get("state_dir", "~/.biomatch"))
    try:
        settings.update(_overrides(read_key_values(path), DEPLOYMENT_KEYS))
        config = DeploymentConfig(**settings)
    except ConfigError:
        raise
    except (ValidationError, ValueError) as e:
        raise ConfigError(f"invalid deployment configuration: {e}") from e
    return config.model_copy(update={"state_dir": os.path.expanduser(config.state_dir)})


def load_experiment(path: Optional[Union[str, Path]] = None):
    from biomatch.harness.experiment import EXPERIMENT_KEYS, ExperimentConfig

    settings = {**get_experiment_defaults(), **get_training_defaults()}
    system = get_system_defaults()
    for name in ("lambda_bits", "capacity", "seed", "space_kind"):
        if name in system:
            settings[name] = system[name]
    settings.setdefault("output_dir", get_path_config().get("output_dir", "biomatch-out"))
    try:
        settings.update(_overrides(read_key_values(path), EXPERIMENT_KEYS))
        return ExperimentConfig(**settings)
    except ConfigError:
        raise
    except (ValidationError, ValueError) as e:
        raise ConfigError(f"invalid experiment configuration: {e}") from e
