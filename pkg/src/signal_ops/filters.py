from dataclasses import dataclass
from typing import Tuple

import numpy as np
import torch
from scipy import signal

from src.latents.types import AudioBuffer


@dataclass(frozen=True)
class BandSplitConfig:
    cutoff_hz: float
    filter_taps: int = 255
    window: str = "hann"

    def __post_init__(self):
        if self.cutoff_hz <= 0:
            raise ValueError(f"{self.cutoff_hz=} must be positive")
        if self.filter_taps < 1 or self.filter_taps % 2 == 0:
            raise ValueError(f"{self.filter_taps=} must be an odd positive integer")

    @staticmethod
    def for_low_rate(low_rate_hz: int, **kwargs) -> "BandSplitConfig":
        """
        Splits at the Nyquist frequency of the low-rate input.
        """
        return BandSplitConfig(cutoff_hz=low_rate_hz / 2, **kwargs)


def lowpass_taps(cfg: BandSplitConfig, sample_rate_hz: int) -> np.ndarray:
    nyquist = sample_rate_hz / 2
    if cfg.cutoff_hz >= nyquist:
        raise ValueError(f"{cfg.cutoff_hz=} must be below the Nyquist frequency {nyquist}")
    return signal.firwin(
        cfg.filter_taps, cfg.cutoff_hz, window=cfg.window, fs=sample_rate_hz
    )


def band_split(x: AudioBuffer, cfg: BandSplitConfig) -> Tuple[AudioBuffer, AudioBuffer]:
    """
    Complementary linear-phase split. The low band is the input convolved with a
    windowed-sinc low-pass, centred so that the (taps - 1) / 2 group delay is
    removed; the high band is the residual, so low + high reproduces the input.

    :param x: input audio
    :param cfg: split configuration
    :return: low band and high band, both the length and rate of x
    """
    taps = lowpass_taps(cfg, x.sample_rate_hz)
    samples = x.samples.double().numpy()
    low = signal.fftconvolve(samples, taps[None, :], mode="same", axes=-1)
    high = samples - low
    return (
        AudioBuffer(
            samples=torch.from_numpy(low).to(x.samples.dtype),
            sample_rate_hz=x.sample_rate_hz,
        ),
        AudioBuffer(
            samples=torch.from_numpy(high).to(x.samples.dtype),
            sample_rate_hz=x.sample_rate_hz,
        ),
    )
