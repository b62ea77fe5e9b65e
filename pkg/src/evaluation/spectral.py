from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Tuple

import librosa
import numpy as np
import torch

from src.exceptions import DimensionError
from src.latents.types import AudioBuffer

MAGNITUDE_FLOOR = 1e-5


@dataclass(frozen=True)
class STFTDistanceConfig:
    """
    Each resolution is (fft_size, hop, window_length) with a Hann window.
    """

    resolutions: Tuple[Tuple[int, int, int], ...] = field(
        default=((512, 50, 240), (1024, 120, 600), (2048, 240, 1200))
    )
    eps: float = MAGNITUDE_FLOOR

    def __post_init__(self):
        object.__setattr__(
            self, "resolutions", tuple(tuple(r) for r in self.resolutions)
        )
        if not self.resolutions:
            raise ValueError("At least one STFT resolution is needed")
        for fft_size, hop, window_length in self.resolutions:
            if not 0 < hop < window_length <= fft_size:
                raise ValueError(
                    f"Resolution {(fft_size, hop, window_length)} violates hop < window_length <= fft_size"
                )


@dataclass(frozen=True)
class MelDistanceConfig:
    fft_size: int = 2048
    hop: int = 512
    mel_bins: int = 128
    fmin: float = 0.0
    fmax: Optional[float] = None
    floor: float = MAGNITUDE_FLOOR


def stft_magnitude(
    x: torch.Tensor,
    fft_size: int,
    hop: int,
    window_length: int,
) -> torch.Tensor:
    """
    Centred, zero-padded STFT magnitude.

    :param x: signals of size (B, L)
    :return: magnitudes of size (B, fft_size // 2 + 1, 1 + L // hop)
    """
    window = torch.hann_window(window_length, dtype=x.dtype, device=x.device)
    spectrum = torch.stft(
        x,
        n_fft=fft_size,
        hop_length=hop,
        win_length=window_length,
        window=window,
        center=True,
        pad_mode="constant",
        return_complex=True,
    )
    return spectrum.abs()


def spectral_convergence(
    reference_magnitude: torch.Tensor,
    estimate_magnitude: torch.Tensor,
    eps: float = MAGNITUDE_FLOOR,
) -> torch.Tensor:
    """
    The reference norm is floored at eps, so a silent reference gives a finite value.
    """
    return torch.linalg.norm(
        (reference_magnitude - estimate_magnitude).flatten()
    ) / torch.linalg.norm(reference_magnitude.flatten()).clamp(min=eps)


def log_magnitude_distance(
    reference_magnitude: torch.Tensor,
    estimate_magnitude: torch.Tensor,
    eps: float = MAGNITUDE_FLOOR,
) -> torch.Tensor:
    return (
        torch.log(reference_magnitude + eps) - torch.log(estimate_magnitude + eps)
    ).abs().mean()


def stft_distance_terms(
    reference: torch.Tensor,
    estimate: torch.Tensor,
    config: STFTDistanceConfig,
) -> List[Tuple[torch.Tensor, torch.Tensor]]:
    """
    Spectral convergence and log-magnitude L1 per resolution.

    :param reference: reference signals of size (B, L)
    :param estimate: estimated signals of size (B, L)
    :return: list of (spectral convergence, log magnitude distance), one per resolution
    """
    terms = []
    for fft_size, hop, window_length in config.resolutions:
        reference_magnitude = stft_magnitude(reference, fft_size, hop, window_length)
        estimate_magnitude = stft_magnitude(estimate, fft_size, hop, window_length)
        terms.append(
            (
                spectral_convergence(
                    reference_magnitude, estimate_magnitude, eps=config.eps
                ),
                log_magnitude_distance(
                    reference_magnitude, estimate_magnitude, eps=config.eps
                ),
            )
        )
    return terms


def multi_resolution_stft_distance(
    reference: torch.Tensor,
    estimate: torch.Tensor,
    config: STFTDistanceConfig,
) -> torch.Tensor:
    """
    Mean over resolutions of spectral convergence plus log-magnitude L1.
    The reference normalises the spectral convergence term, so the distance is not symmetric.
    Differentiable with respect to both inputs.

    :param reference: reference signals of size (B, L)
    :param estimate: estimated signals of size (B, L)
    :return: scalar distance
    """
    if reference.shape != estimate.shape:
        raise DimensionError(
            f"Signals must have equal shapes, got {tuple(reference.shape)} and {tuple(estimate.shape)}"
        )
    terms = stft_distance_terms(reference, estimate, config)
    return torch.stack([sc + log_magnitude for sc, log_magnitude in terms]).mean()


def _check_aligned(a: AudioBuffer, b: AudioBuffer) -> None:
    if a.sample_rate_hz != b.sample_rate_hz:
        raise DimensionError(f"Sample rates differ: {a.sample_rate_hz} and {b.sample_rate_hz}")
    if a.samples.shape != b.samples.shape:
        raise DimensionError(
            f"Signals must be aligned, got {tuple(a.samples.shape)} and {tuple(b.samples.shape)}"
        )


def stft_distance(
    a: AudioBuffer,
    b: AudioBuffer,
    config: STFTDistanceConfig = STFTDistanceConfig(),
) -> float:
    """
    Multi-resolution STFT distance with a as the reference.
    Channels are treated as a batch of signals.
    """
    _check_aligned(a, b)
    if torch.equal(a.samples, b.samples):
        return 0.0
    with torch.no_grad():
        return float(
            multi_resolution_stft_distance(
                reference=a.samples.double(), estimate=b.samples.double(), config=config
            )
        )


@lru_cache(maxsize=16)
def _mel_filterbank(
    sample_rate_hz: int,
    fft_size: int,
    mel_bins: int,
    fmin: float,
    fmax: Optional[float],
) -> np.ndarray:
    filterbank = librosa.filters.mel(
        sr=sample_rate_hz,
        n_fft=fft_size,
        n_mels=mel_bins,
        fmin=fmin,
        fmax=fmax if fmax is not None else sample_rate_hz / 2,
    )
    if not (filterbank.sum(axis=1) > 0).all():
        raise ValueError(
            f"Mel filterbank has empty rows for {sample_rate_hz=}, {fft_size=}, {mel_bins=}"
        )
    return filterbank


def mel_filterbank(sample_rate_hz: int, config: MelDistanceConfig) -> torch.Tensor:
    """
    :return: filterbank of size (mel_bins, fft_size // 2 + 1)
    """
    return torch.from_numpy(
        _mel_filterbank(
            sample_rate_hz, config.fft_size, config.mel_bins, config.fmin, config.fmax
        )
    )


def log_mel_magnitude(
    x: torch.Tensor, sample_rate_hz: int, config: MelDistanceConfig
) -> torch.Tensor:
    """
    :param x: signals of size (B, L)
    :return: floored natural-log mel magnitudes of size (B, mel_bins, frames)
    """
    magnitude = stft_magnitude(x, config.fft_size, config.hop, config.fft_size)
    mel = mel_filterbank(sample_rate_hz, config).to(magnitude) @ magnitude
    return torch.log(torch.clamp(mel, min=config.floor))


def mel_distance(
    a: AudioBuffer,
    b: AudioBuffer,
    config: MelDistanceConfig = MelDistanceConfig(),
) -> float:
    """
    Mean absolute difference of log-mel magnitudes.
    Channels are treated as a batch of signals.
    """
    _check_aligned(a, b)
    if torch.equal(a.samples, b.samples):
        return 0.0
    with torch.no_grad():
        return float(
            (
                log_mel_magnitude(a.samples.double(), a.sample_rate_hz, config)
                - log_mel_magnitude(b.samples.double(), b.sample_rate_hz, config)
            )
            .abs()
            .mean()
        )
