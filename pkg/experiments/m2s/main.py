import argparse
import logging

from experiments.config import load_manifest, resolved_yaml
from experiments.runners import run_m2s_experiment
from experiments.schemas import TaskSchema
from src.evaluation.reports import format_table
from src.exceptions import ConfigError
from src.utils import configure_logging, set_seed

logger = logging.getLogger(__name__)

parser = argparse.ArgumentParser(
    description="Main script for the mono-to-stereo experiment."
)
parser.add_argument(
    "--config_path", type=str, required=True, help="Path to config for experiment."
)
parser.add_argument(
    "--seed",
    type=int,
    required=False,
    default=None,
    help="Overrides the seed in the config.",
)


def main(config_path: str, seed: int = None) -> None:
    overrides = [] if seed is None else [f"seed={seed}"]
    manifest = load_manifest(config_path=config_path, overrides=overrides)
    if manifest.task != TaskSchema.m2s:
        raise ConfigError("task", f"expected {TaskSchema.m2s.value!r}, got {manifest.task!r}")
    logger.info(f"Running experiment with config:\n{resolved_yaml(manifest)}")
    set_seed(manifest.seed)
    report = run_m2s_experiment(manifest)
    print(format_table(report).to_string())


if __name__ == "__main__":
    configure_logging()
    args = parser.parse_args()
    main(config_path=args.config_path, seed=args.seed)
