import math

import numpy as np
import pytest
import torch

from src.exceptions import DimensionError
from src.latents.types import AudioBuffer
from src.signal_ops import (
    BandSplitConfig,
    band_split,
    channel_log_energy_ratio,
    chunk_audio,
    degrade_bandwidth,
    downmix_to_mono,
    from_mid_side,
    resample_sinc,
    swap_channels,
    to_mid_side,
)


def _tone(frequency_hz: float, seconds: float, sample_rate_hz: int, amplitude: float = 0.5):
    t = torch.arange(int(round(seconds * sample_rate_hz)), dtype=torch.float64) / sample_rate_hz
    return AudioBuffer(
        samples=(amplitude * torch.sin(2 * math.pi * frequency_hz * t)).float()[None, :],
        sample_rate_hz=sample_rate_hz,
    )


def _energy(x: np.ndarray) -> float:
    return float(np.sum(np.asarray(x, dtype=np.float64) ** 2))


@pytest.mark.parametrize(
    "source_rate,target_rate,length,expected_length",
    [
        [22050, 44100, 22050, 44100],
        [44100, 22050, 44100, 22050],
        [8000, 4000, 801, 401],
        [16000, 24000, 1000, 1500],
    ],
)
def test_resample_length(source_rate, target_rate, length, expected_length):
    x = AudioBuffer(samples=torch.zeros(1, length), sample_rate_hz=source_rate)
    y = resample_sinc(x, target_rate)
    assert y.sample_rate_hz == target_rate
    assert y.length == expected_length


def test_resample_dc_invariance():
    x = AudioBuffer(samples=torch.full((1, 22050), 0.5), sample_rate_hz=22050)
    y = resample_sinc(x, 44100).samples[0, 400:-400]
    assert torch.allclose(y, torch.full_like(y, 0.5), atol=1e-3)


def test_resample_upsampled_tone_has_no_images():
    y = resample_sinc(_tone(1000, 1.0, 22050), 44100).numpy()[0]
    spectrum = np.abs(np.fft.rfft(y * np.hanning(len(y)))) ** 2
    frequencies = np.fft.rfftfreq(len(y), d=1 / 44100)
    assert abs(frequencies[np.argmax(spectrum)] - 1000) <= 1.0
    above = spectrum[frequencies > 11025].sum()
    assert 10 * np.log10(above / spectrum.max()) < -60


def test_resample_round_trip_of_band_limited_tone():
    x = _tone(1000, 0.5, 44100)
    y = resample_sinc(resample_sinc(x, 22050), 44100)
    error = (y.samples[0, 500:-500] - x.samples[0, 500:-500]).abs().max()
    assert error < 1e-3


def test_resample_linearity():
    generator = torch.Generator().manual_seed(0)
    x = AudioBuffer(samples=torch.randn(1, 999, generator=generator), sample_rate_hz=8000)
    y = AudioBuffer(samples=torch.randn(1, 999, generator=generator), sample_rate_hz=8000)
    combined = AudioBuffer(samples=2.0 * x.samples - 0.5 * y.samples, sample_rate_hz=8000)
    expected = 2.0 * resample_sinc(x, 16000).samples - 0.5 * resample_sinc(y, 16000).samples
    assert torch.allclose(resample_sinc(combined, 16000).samples, expected, atol=1e-5)


def test_resample_rejects_non_positive_rate():
    with pytest.raises(ValueError):
        resample_sinc(_tone(100, 0.1, 8000), 0)


def test_degrade_bandwidth_keeps_rate_and_length():
    x = _tone(300, 0.3, 8000)
    y = degrade_bandwidth(x, factor=2)
    assert y.sample_rate_hz == 8000
    assert y.length == x.length


def test_degrade_bandwidth_removes_high_band():
    x = _tone(3000, 1.0, 8000)
    y = degrade_bandwidth(x, factor=2).numpy()[0, 500:-500]
    assert 10 * np.log10(_energy(y) / _energy(x.numpy()[0, 500:-500])) < -50


@pytest.mark.parametrize(
    "frequency_hz,passes_low",
    [
        [100.0, True],
        [15000.0, False],
    ],
)
def test_band_split_tone_placement(frequency_hz, passes_low):
    x = _tone(frequency_hz, 1.0, 44100)
    low, high = band_split(x, BandSplitConfig(cutoff_hz=11025))
    interior = slice(1000, -1000)
    tone_energy = _energy(x.numpy()[0, interior])
    kept, rejected = (low, high) if passes_low else (high, low)
    assert np.allclose(kept.numpy()[0, interior], x.numpy()[0, interior], atol=1e-2)
    assert 10 * np.log10(_energy(rejected.numpy()[0, interior]) / tone_energy) < -50


def test_band_split_is_complementary():
    generator = torch.Generator().manual_seed(3)
    x = AudioBuffer(samples=0.3 * torch.randn(2, 4000, generator=generator), sample_rate_hz=8000)
    low, high = band_split(x, BandSplitConfig.for_low_rate(4000))
    assert low.length == high.length == x.length
    assert (low.samples + high.samples - x.samples).abs().max() < 1e-3


@pytest.mark.parametrize(
    "config",
    [
        BandSplitConfig(cutoff_hz=4000),
        BandSplitConfig(cutoff_hz=5000),
    ],
)
def test_band_split_rejects_cutoff_at_nyquist(config):
    with pytest.raises(ValueError):
        band_split(_tone(100, 0.1, 8000), config)


def test_for_low_rate_sets_nyquist_cutoff():
    assert BandSplitConfig.for_low_rate(22050).cutoff_hz == 11025.0


@pytest.mark.parametrize(
    "left,right,mid,side",
    [
        [[1.0, 2.0], [1.0, 2.0], [1.0, 2.0], [0.0, 0.0]],
        [[1.0, -2.0], [-1.0, 2.0], [0.0, 0.0], [1.0, -2.0]],
        [[3.0, 0.0], [1.0, 4.0], [2.0, 2.0], [1.0, -2.0]],
    ],
)
def test_mid_side(left, right, mid, side):
    stereo = AudioBuffer(samples=torch.tensor([left, right]), sample_rate_hz=8000)
    mid_side = to_mid_side(stereo)
    assert torch.equal(mid_side.samples, torch.tensor([mid, side]))
    assert torch.allclose(from_mid_side(mid_side).samples, stereo.samples, atol=1e-6)


def test_mid_side_round_trip_random():
    stereo = AudioBuffer(
        samples=torch.randn(2, 500, generator=torch.Generator().manual_seed(0)),
        sample_rate_hz=8000,
    )
    assert torch.allclose(from_mid_side(to_mid_side(stereo)).samples, stereo.samples, atol=1e-6)


@pytest.mark.parametrize(
    "operation",
    [to_mid_side, from_mid_side, swap_channels, downmix_to_mono, channel_log_energy_ratio],
)
def test_stereo_operations_reject_mono(operation):
    with pytest.raises(DimensionError):
        operation(_tone(100, 0.1, 8000))


def test_swap_and_downmix():
    stereo = AudioBuffer(samples=torch.tensor([[1.0, 3.0], [3.0, 5.0]]), sample_rate_hz=8000)
    assert torch.equal(swap_channels(stereo).samples, torch.tensor([[3.0, 5.0], [1.0, 3.0]]))
    assert torch.equal(downmix_to_mono(stereo).samples, torch.tensor([[2.0, 4.0]]))


@pytest.mark.parametrize(
    "left_gain,right_gain,expected",
    [
        [1.0, 1.0, 0.0],
        [2.0, 1.0, math.log(4.0)],
        [1.0, 2.0, -math.log(4.0)],
    ],
)
def test_channel_log_energy_ratio(left_gain, right_gain, expected):
    shape = torch.sin(torch.linspace(0, 20, 400))
    stereo = AudioBuffer(
        samples=torch.stack([left_gain * shape, right_gain * shape]), sample_rate_hz=8000
    )
    assert math.isclose(channel_log_energy_ratio(stereo), expected, abs_tol=1e-6)


def test_channel_log_energy_ratio_silent_right():
    left = torch.zeros(100)
    left[0] = 1.0
    stereo = AudioBuffer(samples=torch.stack([left, torch.zeros(100)]), sample_rate_hz=8000)
    ratio = channel_log_energy_ratio(stereo)
    assert math.isfinite(ratio)
    assert math.isclose(ratio, math.log((1 + 1e-12) / 1e-12), rel_tol=1e-9)


@pytest.mark.parametrize(
    "seconds,sample_rate_hz,duration_s,hop_s,number_of_chunks,chunk_length",
    [
        [10.0, 8000, 4.0, 4.0, 2, 32000],
        [1.4, 44100, 1.4, None, 1, 61740],
        [1.0, 8000, 4.0, None, 0, None],
        [2.0, 8000, 1.0, 0.5, 3, 8000],
    ],
)
def test_chunk_audio(seconds, sample_rate_hz, duration_s, hop_s, number_of_chunks, chunk_length):
    x = AudioBuffer(
        samples=torch.arange(int(seconds * sample_rate_hz), dtype=torch.float32)[None, :] / 1e6,
        sample_rate_hz=sample_rate_hz,
    )
    chunks = chunk_audio(x, duration_s, hop_s)
    assert len(chunks) == number_of_chunks
    for i, chunk in enumerate(chunks):
        assert chunk.length == chunk_length
        start = int(round((hop_s or duration_s) * sample_rate_hz)) * i
        assert torch.equal(chunk.samples, x.samples[:, start : start + chunk_length])
