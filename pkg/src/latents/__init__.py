from src.latents.audio_io import read_wav, write_wav
from src.latents.relt import read_latent_file, write_latent_file
from src.latents.types import (
    SUPPORTED_SAMPLE_RATES,
    AudioBuffer,
    LatentSequence,
    StackedLatent,
    split_streams,
    stack_streams,
)

__all__ = [
    "AudioBuffer",
    "LatentSequence",
    "StackedLatent",
    "SUPPORTED_SAMPLE_RATES",
    "read_latent_file",
    "read_wav",
    "split_streams",
    "stack_streams",
    "write_latent_file",
    "write_wav",
]
