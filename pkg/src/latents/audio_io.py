import logging

import numpy as np
import soundfile
import torch

from src.exceptions import DataError
from src.latents.types import AudioBuffer

logger = logging.getLogger(__name__)

WAV_SUBTYPES = ("PCM_16", "FLOAT")


def read_wav(path: str) -> AudioBuffer:
    try:
        samples, sample_rate = soundfile.read(path, dtype="float32", always_2d=True)
    except (RuntimeError, soundfile.SoundFileError) as error:
        raise DataError(f"Cannot read audio from {path}: {error}") from error
    logger.debug(f"Read {samples.shape[0]} samples at {sample_rate=} from {path=}.")
    return AudioBuffer(
        samples=torch.from_numpy(np.ascontiguousarray(samples.T)),
        sample_rate_hz=sample_rate,
    )


def write_wav(path: str, audio: AudioBuffer, subtype: str = "FLOAT") -> None:
    if subtype not in WAV_SUBTYPES:
        raise ValueError(f"{subtype=} must be one of {WAV_SUBTYPES}")
    samples = audio.numpy().T.astype(np.float32)
    if subtype == "PCM_16":
        samples = np.clip(samples, -1.0, 1.0)
    soundfile.write(
        path, samples, audio.sample_rate_hz, subtype=subtype, format="WAV"
    )
