import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import torch

from src.exceptions import DimensionError, EmptyInputError, SampleRateError
from src.latents.types import AudioBuffer, LatentSequence, StackedLatent, stack_streams


@dataclass(frozen=True)
class AutoencoderSpec:
    sample_rate_hz: int
    downsample_factor: int
    latent_channels: int
    variational: bool = True

    def __post_init__(self):
        for name in ("sample_rate_hz", "downsample_factor", "latent_channels"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def frame_rate_hz(self) -> float:
        return self.sample_rate_hz / self.downsample_factor

    def number_of_frames(self, number_of_samples: int) -> int:
        return math.ceil(number_of_samples / self.downsample_factor)


PAPER_AUTOENCODER_SPEC = AutoencoderSpec(
    sample_rate_hz=44100, downsample_factor=1024, latent_channels=64
)
TINY_AUTOENCODER_SPEC = AutoencoderSpec(
    sample_rate_hz=8000, downsample_factor=64, latent_channels=16
)
AUTOENCODER_PRESETS = {
    "paper": PAPER_AUTOENCODER_SPEC,
    "tiny": TINY_AUTOENCODER_SPEC,
}


class FrozenAutoencoder(ABC):
    """
    The frozen encoder/decoder pair every pipeline is built around.

    B is the batch size
    L is the number of waveform samples
    C is the number of latent channels
    T is the number of latent frames
    """

    spec: AutoencoderSpec

    @abstractmethod
    def encode_tensor(self, x: torch.Tensor) -> torch.Tensor:
        """
        :param x: waveforms of size (B, L)
        :return: latents of size (B, C, ceil(L / downsample_factor))
        """
        raise NotImplementedError

    @abstractmethod
    def decode_tensor(self, z: torch.Tensor) -> torch.Tensor:
        """
        :param z: latents of size (B, C, T)
        :return: waveforms of size (B, T * downsample_factor)
        """
        raise NotImplementedError

    def encode(self, x: AudioBuffer) -> LatentSequence:
        if x.sample_rate_hz != self.spec.sample_rate_hz:
            raise SampleRateError(
                f"Autoencoder expects {self.spec.sample_rate_hz} Hz, got {x.sample_rate_hz} Hz"
            )
        if x.channels != 1:
            raise DimensionError(
                f"encode takes mono audio, got {x.channels} channels; use encode_stereo"
            )
        if x.length == 0:
            raise EmptyInputError("Cannot encode a zero-length waveform")
        with torch.no_grad():
            z = self.encode_tensor(x.samples)
        return LatentSequence(data=z[0], frame_rate_hz=self.spec.frame_rate_hz)

    def decode(self, z: LatentSequence) -> AudioBuffer:
        if z.channels != self.spec.latent_channels:
            raise DimensionError(
                f"Autoencoder expects {self.spec.latent_channels} latent channels, got {z.channels}"
            )
        with torch.no_grad():
            x = self.decode_tensor(z.data[None, ...])
        return AudioBuffer(samples=x, sample_rate_hz=self.spec.sample_rate_hz)

    def encode_stereo(self, x: AudioBuffer) -> StackedLatent:
        if x.channels != 2:
            raise DimensionError(f"Expected stereo audio, got {x.channels} channel(s)")
        return stack_streams(self.encode(x.channel(0)), self.encode(x.channel(1)))

    def decode_stereo(self, z: StackedLatent) -> AudioBuffer:
        left = self.decode(z.stream(0))
        right = self.decode(z.stream(1))
        return AudioBuffer(
            samples=torch.cat([left.samples, right.samples], dim=0),
            sample_rate_hz=self.spec.sample_rate_hz,
        )
