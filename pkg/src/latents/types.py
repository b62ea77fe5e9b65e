from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
import torch

from src.exceptions import (
    DimensionError,
    NonFiniteError,
    SampleRateError,
    UnsupportedStreamCountError,
)

SUPPORTED_SAMPLE_RATES = (
    4000,
    8000,
    11025,
    16000,
    22050,
    24000,
    32000,
    44100,
    48000,
)


def _check_finite(data: torch.Tensor, name: str) -> None:
    if not bool(torch.isfinite(data).all()):
        raise NonFiniteError(f"{name} contains NaN or Inf values")


@dataclass(frozen=True)
class LatentSequence:
    """
    A latent sequence of C channels and T frames.
    data is of size (C, T)
    """

    data: torch.Tensor
    frame_rate_hz: float

    def __post_init__(self):
        if self.data.ndim != 2:
            raise DimensionError(
                f"Latent data must have shape (C, T), got {tuple(self.data.shape)}"
            )
        if self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise DimensionError(
                f"Latent data must have positive C and T, got {tuple(self.data.shape)}"
            )
        if not self.frame_rate_hz > 0:
            raise DimensionError(f"{self.frame_rate_hz=} must be positive")
        _check_finite(self.data, "latent")
        object.__setattr__(self, "data", self.data.detach().clone())
        object.__setattr__(self, "frame_rate_hz", float(self.frame_rate_hz))

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def frames(self) -> int:
        return self.data.shape[1]

    @property
    def duration_seconds(self) -> float:
        return self.frames / self.frame_rate_hz

    def numpy(self) -> np.ndarray:
        return self.data.cpu().numpy()

    @staticmethod
    def from_numpy(data: np.ndarray, frame_rate_hz: float) -> "LatentSequence":
        return LatentSequence(data=torch.from_numpy(np.array(data)), frame_rate_hz=frame_rate_hz)


@dataclass(frozen=True)
class StackedLatent:
    """
    S latent streams sharing channels, frames and frame rate.
    data is of size (S, C, T), stream 0 is left and stream 1 is right for stereo
    """

    data: torch.Tensor
    frame_rate_hz: float

    def __post_init__(self):
        if self.data.ndim != 3:
            raise DimensionError(
                f"Stacked latent data must have shape (S, C, T), got {tuple(self.data.shape)}"
            )
        if min(self.data.shape) < 1:
            raise DimensionError(
                f"Stacked latent data must have positive S, C and T, got {tuple(self.data.shape)}"
            )
        if not self.frame_rate_hz > 0:
            raise DimensionError(f"{self.frame_rate_hz=} must be positive")
        _check_finite(self.data, "stacked latent")
        object.__setattr__(self, "data", self.data.detach().clone())
        object.__setattr__(self, "frame_rate_hz", float(self.frame_rate_hz))

    @property
    def streams(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> int:
        return self.data.shape[1]

    @property
    def frames(self) -> int:
        return self.data.shape[2]

    def stream(self, index: int) -> LatentSequence:
        return LatentSequence(data=self.data[index], frame_rate_hz=self.frame_rate_hz)

    def numpy(self) -> np.ndarray:
        return self.data.cpu().numpy()


@dataclass(frozen=True)
class AudioBuffer:
    """
    Multichannel waveform.
    samples is of size (channels, L)
    """

    samples: torch.Tensor
    sample_rate_hz: int

    def __post_init__(self):
        if self.samples.ndim != 2:
            raise DimensionError(
                f"Audio samples must have shape (channels, L), got {tuple(self.samples.shape)}"
            )
        if self.samples.shape[0] not in (1, 2):
            raise DimensionError(
                f"Audio must be mono or stereo, got {self.samples.shape[0]} channels"
            )
        if self.sample_rate_hz not in SUPPORTED_SAMPLE_RATES:
            raise SampleRateError(
                f"{self.sample_rate_hz=} is not one of {SUPPORTED_SAMPLE_RATES}"
            )
        _check_finite(self.samples, "audio")
        object.__setattr__(self, "samples", self.samples.detach().clone())
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))

    @property
    def channels(self) -> int:
        return self.samples.shape[0]

    @property
    def length(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_seconds(self) -> float:
        return self.length / self.sample_rate_hz

    def channel(self, index: int) -> "AudioBuffer":
        return AudioBuffer(
            samples=self.samples[index : index + 1],
            sample_rate_hz=self.sample_rate_hz,
        )

    def numpy(self) -> np.ndarray:
        return self.samples.cpu().numpy()

    @staticmethod
    def from_numpy(samples: np.ndarray, sample_rate_hz: int) -> "AudioBuffer":
        samples = np.array(samples)
        if samples.ndim == 1:
            samples = samples[None, :]
        return AudioBuffer(samples=torch.from_numpy(samples), sample_rate_hz=sample_rate_hz)


def stack_streams(left: LatentSequence, right: LatentSequence) -> StackedLatent:
    if left.data.shape != right.data.shape:
        raise DimensionError(
            f"Cannot stack latents of shapes {tuple(left.data.shape)} and {tuple(right.data.shape)}"
        )
    if left.frame_rate_hz != right.frame_rate_hz:
        raise DimensionError(
            f"Cannot stack latents with frame rates {left.frame_rate_hz} and {right.frame_rate_hz}"
        )
    return StackedLatent(
        data=torch.stack([left.data, right.data], dim=0),
        frame_rate_hz=left.frame_rate_hz,
    )


def split_streams(stacked: StackedLatent) -> Tuple[LatentSequence, LatentSequence]:
    if stacked.streams != 2:
        raise UnsupportedStreamCountError(
            f"Only stereo (2 stream) latents can be split, got {stacked.streams} streams"
        )
    return stacked.stream(0), stacked.stream(1)


AnyLatent = Union[LatentSequence, StackedLatent]
