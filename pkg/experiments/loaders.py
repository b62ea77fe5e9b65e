import logging
import os
from typing import Union

from src.autoencoders.toy_vae import ToyVAE, ToyVAEConfig
from src.exceptions import ArtifactMismatchError, DataError
from src.latents.audio_io import read_wav
from src.latents.relt import read_latent_file
from src.latents.types import AudioBuffer, LatentSequence, StackedLatent
from src.samplers import ConditionVector
from src.training.checkpoints import TrainedModels, load_autoencoder, load_trained_models

logger = logging.getLogger(__name__)

LATENT_SUFFIX = ".relt"


def load_frozen_autoencoder(path: str, expected: ToyVAEConfig = None) -> ToyVAE:
    if not os.path.exists(path):
        raise ArtifactMismatchError(f"Autoencoder checkpoint {path} does not exist")
    model = load_autoencoder(path, expected=expected)
    logger.info(f"Loaded frozen autoencoder from {path=} with {model.spec}.")
    return model


def load_models(path: str, task: str) -> TrainedModels:
    if not os.path.exists(path):
        raise ArtifactMismatchError(f"Checkpoint {path} does not exist")
    models = load_trained_models(path, kind=task)
    logger.info(f"Loaded {task} models at step {models.step} from {path=}.")
    return models


def is_latent_path(path: str) -> bool:
    return path.lower().endswith(LATENT_SUFFIX)


def load_input(path: str) -> Union[AudioBuffer, LatentSequence, StackedLatent]:
    """
    Reads a WAV file or a latent file, chosen by suffix.
    """
    if not os.path.exists(path):
        raise DataError(f"Input {path} does not exist")
    if is_latent_path(path):
        return read_latent_file(path)
    return read_wav(path)


def load_condition_reference(path: str, frozen_ae: ToyVAE) -> StackedLatent:
    """
    Stereo latent of a reference recording, read from a latent file or encoded from a WAV file.
    """
    reference = load_input(path)
    if isinstance(reference, AudioBuffer):
        if reference.channels != 2:
            raise DataError(f"Condition reference {path} must be stereo")
        return frozen_ae.encode_stereo(reference)
    if not isinstance(reference, StackedLatent) or reference.streams != 2:
        raise DataError(f"Condition reference {path} must hold a stereo latent")
    return reference


def describe_condition(c: ConditionVector) -> str:
    return f"condition of dimension {c.dimension} (norm {float(c.sample.norm()):.3f})"
