import dataclasses
from typing import List, Sequence

from tqdm import tqdm

from experiments.schemas import ExperimentManifest
from src.autoencoders.base import FrozenAutoencoder
from src.autoencoders.toy_vae import ToyVAEConfig
from src.evaluation.spectral import MelDistanceConfig, STFTDistanceConfig
from src.exceptions import ConfigError
from src.latents.types import AudioBuffer
from src.networks.condition_encoder import ConditioningEncoderSpec
from src.networks.discriminator import DiscriminatorSpec
from src.networks.latent_predictor import ModelSpec
from src.training.config import TrainingConfig
from src.training.pairs import TrainingPair, make_bwe_pair, make_m2s_pair

AUTOENCODER_CONFIG_PRESETS = {
    "tiny": ToyVAEConfig.tiny,
    "paper": ToyVAEConfig.paper,
}


def _with_overrides(base, overrides: dict, key: str):
    known = {f.name for f in dataclasses.fields(base)}
    for name in overrides:
        if name not in known:
            raise ConfigError(f"{key}.{name}", "unknown field")
    try:
        return dataclasses.replace(base, **overrides)
    except (TypeError, ValueError) as error:
        raise ConfigError(key, str(error)) from error


def construct_autoencoder_config(manifest: ExperimentManifest) -> ToyVAEConfig:
    if manifest.autoencoder.preset not in AUTOENCODER_CONFIG_PRESETS:
        raise ConfigError(
            "autoencoder.preset",
            f"must be one of {sorted(AUTOENCODER_CONFIG_PRESETS)}",
        )
    return _with_overrides(
        AUTOENCODER_CONFIG_PRESETS[manifest.autoencoder.preset](),
        manifest.autoencoder.overrides,
        "autoencoder.overrides",
    )


def construct_model_spec(manifest: ExperimentManifest, latent_channels: int) -> ModelSpec:
    conditioned = manifest.task == "m2s"
    preset = manifest.model.preset
    if preset == "small":
        spec = ModelSpec.small(latent_channels)
    elif preset == "medium":
        spec = ModelSpec.medium(latent_channels)
    elif preset == "stereo":
        spec = ModelSpec.stereo(latent_channels)
    else:
        spec = ModelSpec.tiny(latent_channels, conditioned=conditioned)
    if conditioned and not spec.conditioned:
        spec = dataclasses.replace(spec, conditioned=True, output_streams=2)
    if not conditioned and spec.conditioned:
        raise ConfigError("model.preset", f"{preset!r} is a conditioned preset, task is bwe")
    return _with_overrides(spec, manifest.model.overrides, "model.overrides")


def construct_encoder_spec(
    manifest: ExperimentManifest, model_spec: ModelSpec
) -> ConditioningEncoderSpec:
    try:
        return ConditioningEncoderSpec.for_latent(
            latent_channels=model_spec.latent_channels_out,
            output_dim=model_spec.condition_dim,
            hidden_dim=manifest.encoder.hidden_dim,
            num_blocks=manifest.encoder.num_blocks,
        )
    except ValueError as error:
        raise ConfigError("encoder", str(error)) from error


def construct_discriminator_spec(manifest: ExperimentManifest) -> DiscriminatorSpec:
    try:
        return DiscriminatorSpec(internal_channels=manifest.discriminator.internal_channels)
    except ValueError as error:
        raise ConfigError("discriminator.internal_channels", str(error)) from error


def construct_training_config(manifest: ExperimentManifest) -> TrainingConfig:
    """
    Task recipe defaults, overridden by the manifest's training section.
    """
    config = TrainingConfig.paper(manifest.task).to_dict()
    config["seed"] = manifest.seed
    for key, value in manifest.training.items():
        if key == "weights" and isinstance(value, dict):
            config["weights"] = {**config["weights"], **value}
        else:
            config[key] = value
    return TrainingConfig.from_dict(config)


def construct_stft_config(manifest: ExperimentManifest) -> STFTDistanceConfig:
    try:
        return STFTDistanceConfig(
            resolutions=tuple(tuple(r) for r in manifest.evaluation.stft_resolutions)
        )
    except (TypeError, ValueError) as error:
        raise ConfigError("evaluation.stft_resolutions", str(error)) from error


def construct_mel_config(manifest: ExperimentManifest) -> MelDistanceConfig:
    return MelDistanceConfig(
        fft_size=manifest.evaluation.mel_fft_size,
        hop=manifest.evaluation.mel_hop,
        mel_bins=manifest.evaluation.mel_bins,
    )


def construct_pairs(
    task: str,
    frozen_ae: FrozenAutoencoder,
    chunks: Sequence[AudioBuffer],
) -> List[TrainingPair]:
    make_pair = make_bwe_pair if task == "bwe" else make_m2s_pair
    return [
        make_pair(frozen_ae, chunk, source=f"chunk-{i}")
        for i, chunk in enumerate(tqdm(chunks, desc=f"{task.upper()} Pairs"))
    ]
