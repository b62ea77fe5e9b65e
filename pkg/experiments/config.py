import copy
import hashlib
import os
from typing import Any, Dict, Optional, Sequence

import yaml

from experiments.schemas import ExperimentManifest
from src.exceptions import ConfigError

PRESETS_DIRECTORY = os.path.join(os.path.dirname(__file__), "presets")
OUTPUT_DIR_ENV = "RE_ENCODER_OUTPUT_DIR"
DEFAULT_OUTPUT_ROOT = "outputs"


def preset_path(name: str) -> str:
    path = os.path.join(PRESETS_DIRECTORY, f"{name}.yaml")
    if not os.path.exists(path):
        available = sorted(f[:-5] for f in os.listdir(PRESETS_DIRECTORY) if f.endswith(".yaml"))
        raise ConfigError("preset", f"unknown preset {name!r}, available: {available}")
    return path


def apply_overrides(tree: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """
    Applies dotted key=value overrides, values parsed as YAML scalars or flow collections.
    The override path must already exist in the tree or name a known section key.
    """
    tree = copy.deepcopy(tree)
    for override in overrides:
        if "=" not in override:
            raise ConfigError(override, "override must look like key=value")
        key, raw_value = override.split("=", 1)
        parts = key.strip().split(".")
        node = tree
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(key, "cannot descend into a scalar")
        node[parts[-1]] = yaml.safe_load(raw_value)
    return tree


def load_tree(
    config_path: Optional[str] = None,
    preset: Optional[str] = None,
) -> Dict[str, Any]:
    if config_path is not None and preset is not None:
        raise ConfigError("preset", "give either a config path or a preset, not both")
    path = config_path if config_path is not None else preset_path(preset or "desk-bwe")
    if not os.path.exists(path):
        raise ConfigError("config", f"config file {path} does not exist")
    with open(path, "r") as file:
        return yaml.safe_load(file) or {}


def default_output_dir(experiment_id: str) -> str:
    return os.path.join(os.environ.get(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_ROOT), experiment_id)


def load_manifest(
    config_path: Optional[str] = None,
    preset: Optional[str] = None,
    overrides: Sequence[str] = (),
) -> ExperimentManifest:
    manifest = ExperimentManifest.from_tree(
        apply_overrides(load_tree(config_path=config_path, preset=preset), overrides)
    )
    if manifest.output_dir is None:
        manifest.output_dir = default_output_dir(manifest.experiment_id)
    return manifest


def resolved_yaml(manifest: ExperimentManifest) -> str:
    return yaml.safe_dump(manifest.to_dict(), sort_keys=True)


def manifest_hash(manifest: ExperimentManifest) -> str:
    return hashlib.sha256(resolved_yaml(manifest).encode("utf-8")).hexdigest()
