import math

import torch

from src.exceptions import DimensionError
from src.latents.types import AudioBuffer

ENERGY_FLOOR = 1e-12


def _require_stereo(x: AudioBuffer) -> None:
    if x.channels != 2:
        raise DimensionError(f"Expected stereo audio, got {x.channels} channel(s)")


def to_mid_side(stereo: AudioBuffer) -> AudioBuffer:
    """
    mid = (L + R) / 2, side = (L - R) / 2
    """
    _require_stereo(stereo)
    left, right = stereo.samples[0], stereo.samples[1]
    return AudioBuffer(
        samples=torch.stack([(left + right) / 2, (left - right) / 2]),
        sample_rate_hz=stereo.sample_rate_hz,
    )


def from_mid_side(mid_side: AudioBuffer) -> AudioBuffer:
    _require_stereo(mid_side)
    mid, side = mid_side.samples[0], mid_side.samples[1]
    return AudioBuffer(
        samples=torch.stack([mid + side, mid - side]),
        sample_rate_hz=mid_side.sample_rate_hz,
    )


def swap_channels(stereo: AudioBuffer) -> AudioBuffer:
    _require_stereo(stereo)
    return AudioBuffer(
        samples=stereo.samples.flip(0), sample_rate_hz=stereo.sample_rate_hz
    )


def downmix_to_mono(stereo: AudioBuffer) -> AudioBuffer:
    _require_stereo(stereo)
    return AudioBuffer(
        samples=stereo.samples.mean(dim=0, keepdim=True),
        sample_rate_hz=stereo.sample_rate_hz,
    )


def channel_log_energy_ratio(stereo: AudioBuffer, eps: float = ENERGY_FLOOR) -> float:
    """
    Natural log of (E_left + eps) / (E_right + eps) where E is the sum of squares.
    """
    _require_stereo(stereo)
    energy = stereo.samples.double().pow(2).sum(dim=1)
    return math.log((float(energy[0]) + eps) / (float(energy[1]) + eps))
