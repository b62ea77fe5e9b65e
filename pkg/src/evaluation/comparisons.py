from typing import Dict, List, Sequence

import numpy as np

from src.exceptions import DimensionError, EmptyInputError
from src.latents.types import AudioBuffer
from src.evaluation.spectral import (
    MelDistanceConfig,
    STFTDistanceConfig,
    mel_distance,
    stft_distance,
)
from src.signal_ops.filters import BandSplitConfig, band_split
from src.signal_ops.stereo import to_mid_side

STEREO_VIEWS = ("left", "right", "mid", "side")
BANDS = ("full", "low", "high")


def _pair_metrics(
    a: AudioBuffer,
    b: AudioBuffer,
    suffix: str,
    stft_config: STFTDistanceConfig,
    mel_config: MelDistanceConfig,
) -> Dict[str, float]:
    return {
        f"stft_d.{suffix}": stft_distance(a, b, stft_config),
        f"mel_d.{suffix}": mel_distance(a, b, mel_config),
    }


def banded_metrics(
    a: AudioBuffer,
    b: AudioBuffer,
    split_cfg: BandSplitConfig,
    stft_config: STFTDistanceConfig = STFTDistanceConfig(),
    mel_config: MelDistanceConfig = MelDistanceConfig(),
) -> Dict[str, float]:
    """
    STFT-D and mel-D on the unfiltered signals and on their low and high bands,
    with a as the reference. Both signals go through the same filters.

    :return: keys stft_d.{full,low,high} and mel_d.{full,low,high}
    """
    a_low, a_high = band_split(a, split_cfg)
    b_low, b_high = band_split(b, split_cfg)
    metrics = {}
    for band, (x, y) in zip(BANDS, ((a, b), (a_low, b_low), (a_high, b_high))):
        metrics.update(_pair_metrics(x, y, band, stft_config, mel_config))
    return metrics


def stereo_metrics(
    a_stereo: AudioBuffer,
    b_stereo: AudioBuffer,
    stft_config: STFTDistanceConfig = STFTDistanceConfig(),
    mel_config: MelDistanceConfig = MelDistanceConfig(),
) -> Dict[str, float]:
    """
    Channel-wise STFT-D and mel-D for left, right, mid and side, with a as the reference.

    :return: keys stft_d.{left,right,mid,side} and mel_d.{left,right,mid,side}
    """
    if a_stereo.channels != 2 or b_stereo.channels != 2:
        raise DimensionError(
            f"Stereo metrics need two stereo signals, got {a_stereo.channels} and {b_stereo.channels} channels"
        )
    a_mid_side, b_mid_side = to_mid_side(a_stereo), to_mid_side(b_stereo)
    views = (
        (a_stereo.channel(0), b_stereo.channel(0)),
        (a_stereo.channel(1), b_stereo.channel(1)),
        (a_mid_side.channel(0), b_mid_side.channel(0)),
        (a_mid_side.channel(1), b_mid_side.channel(1)),
    )
    metrics = {}
    for view, (x, y) in zip(STEREO_VIEWS, views):
        metrics.update(_pair_metrics(x, y, view, stft_config, mel_config))
    return metrics


def mean_metrics(rows: Sequence[Dict[str, float]]) -> Dict[str, float]:
    """
    Per-key mean over clips, keys in the order of the first row.
    """
    if len(rows) == 0:
        raise EmptyInputError("No clips were evaluated")
    keys: List[str] = list(rows[0])
    return {key: float(np.mean([row[key] for row in rows])) for key in keys}


def trim_to(a: AudioBuffer, length: int) -> AudioBuffer:
    if a.length < length:
        raise DimensionError(f"Cannot trim a signal of {a.length} samples to {length}")
    return AudioBuffer(samples=a.samples[:, :length], sample_rate_hz=a.sample_rate_hz)
