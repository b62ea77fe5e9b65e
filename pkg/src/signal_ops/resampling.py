from fractions import Fraction

import numpy as np
import torch
from scipy import signal

from src.latents.types import AudioBuffer

KAISER_BETA = 8.6
ZERO_CROSSINGS = 64


def sinc_kernel(
    up: int,
    down: int,
    zero_crossings: int = ZERO_CROSSINGS,
    beta: float = KAISER_BETA,
) -> np.ndarray:
    """
    Kaiser-windowed sinc low-pass for polyphase resampling by up/down.
    The cutoff sits at the lower of the two Nyquist frequencies.

    :param up: upsampling factor
    :param down: downsampling factor
    :param zero_crossings: zero crossings of the sinc on each side of the centre tap
    :param beta: Kaiser window shape parameter
    :return: filter taps of size (2 * zero_crossings * max(up, down) + 1,)
    """
    max_rate = max(up, down)
    return signal.firwin(
        2 * zero_crossings * max_rate + 1,
        1.0 / max_rate,
        window=("kaiser", beta),
    )


def resample_sinc(
    x: AudioBuffer,
    target_rate_hz: int,
    zero_crossings: int = ZERO_CROSSINGS,
    beta: float = KAISER_BETA,
) -> AudioBuffer:
    """
    Band-limited resampling with a windowed-sinc polyphase filter.
    The output has ceil(L * target / source) samples and no group delay.

    :param x: input audio
    :param target_rate_hz: output sample rate
    :return: resampled audio
    """
    if target_rate_hz <= 0:
        raise ValueError(f"{target_rate_hz=} must be positive")
    ratio = Fraction(int(target_rate_hz), x.sample_rate_hz)
    up, down = ratio.numerator, ratio.denominator
    if up == down == 1:
        return AudioBuffer(samples=x.samples, sample_rate_hz=x.sample_rate_hz)
    resampled = signal.resample_poly(
        x.samples.double().numpy(),
        up,
        down,
        axis=-1,
        window=sinc_kernel(up, down, zero_crossings=zero_crossings, beta=beta),
    )
    return AudioBuffer(
        samples=torch.from_numpy(resampled).to(x.samples.dtype),
        sample_rate_hz=int(target_rate_hz),
    )


def degrade_bandwidth(x: AudioBuffer, factor: int = 2) -> AudioBuffer:
    """
    Simulates a low-bandwidth recording at the original rate: sinc-downsample by
    factor, sinc-upsample back and trim to the original length.

    :param x: full-band audio
    :param factor: integer decimation factor
    :return: band-limited audio with the same rate and length as x
    """
    if x.sample_rate_hz % factor:
        raise ValueError(f"{x.sample_rate_hz=} is not divisible by {factor=}")
    low = resample_sinc(x, x.sample_rate_hz // factor)
    restored = resample_sinc(low, x.sample_rate_hz).samples
    if restored.shape[1] < x.length:
        restored = torch.nn.functional.pad(restored, (0, x.length - restored.shape[1]))
    return AudioBuffer(samples=restored[:, : x.length], sample_rate_hz=x.sample_rate_hz)
