import logging
import math
import os
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import torch
from scipy import signal
from sklearn.model_selection import train_test_split

from experiments.schemas import CorpusSection, SyntheticSection
from src.exceptions import DataError, EmptyInputError
from src.latents.audio_io import read_wav
from src.latents.types import AudioBuffer
from src.signal_ops.chunking import chunk_audio
from src.signal_ops.resampling import resample_sinc
from src.signal_ops.stereo import downmix_to_mono

logger = logging.getLogger(__name__)


@dataclass
class Corpus:
    name: str
    clips: List[AudioBuffer]
    names: List[str]

    def __len__(self) -> int:
        return len(self.clips)


def _envelope(
    length: int, sample_rate_hz: int, rng: np.random.Generator
) -> np.ndarray:
    attack = int(rng.uniform(0.005, 0.05) * sample_rate_hz)
    decay = int(rng.uniform(0.05, 0.2) * sample_rate_hz)
    release = int(rng.uniform(0.05, 0.3) * sample_rate_hz)
    sustain = rng.uniform(0.4, 0.8)
    hold = max(length - attack - decay - release, 0)
    envelope = np.concatenate(
        [
            np.linspace(0.0, 1.0, attack, endpoint=False),
            np.linspace(1.0, sustain, decay, endpoint=False),
            np.full(hold, sustain),
            np.linspace(sustain, 0.0, release),
        ]
    )
    return envelope[:length]


def _note(
    length: int,
    sample_rate_hz: int,
    config: SyntheticSection,
    rng: np.random.Generator,
) -> np.ndarray:
    f0 = math.exp(rng.uniform(math.log(config.min_f0_hz), math.log(config.max_f0_hz)))
    t = np.arange(length) / sample_rate_hz
    note = np.zeros(length)
    harmonic = 1
    while harmonic * f0 < 0.95 * sample_rate_hz / 2:
        phase = rng.uniform(0, 2 * np.pi)
        note += np.sin(2 * np.pi * harmonic * f0 * t + phase) / harmonic**config.harmonic_rolloff
        harmonic += 1
    return note * _envelope(length, sample_rate_hz, rng)


def _band_noise(
    length: int, sample_rate_hz: int, rng: np.random.Generator
) -> np.ndarray:
    nyquist = sample_rate_hz / 2
    low = rng.uniform(0.05, 0.4) * nyquist
    high = rng.uniform(low / nyquist + 0.1, 0.95) * nyquist
    sos = signal.butter(4, [low, high], btype="bandpass", fs=sample_rate_hz, output="sos")
    return signal.sosfilt(sos, rng.standard_normal(length))


def synthesize_clip(
    seed: int,
    seconds: float,
    sample_rate_hz: int,
    stereo: bool,
    config: SyntheticSection = SyntheticSection(),
) -> AudioBuffer:
    """
    A music-like clip: a few enveloped harmonic notes over band-passed noise.
    Stereo clips pan the dry signal with a per-clip constant-power law and add a
    decorrelated ambience made of differently delayed copies per channel.
    """
    rng = np.random.default_rng(seed)
    length = int(round(seconds * sample_rate_hz))
    dry = np.zeros(length)
    for _ in range(int(rng.integers(config.min_notes, config.max_notes + 1))):
        start = int(rng.uniform(0.0, 0.5) * length)
        note_length = int(rng.uniform(0.3, 1.0) * (length - start))
        dry[start : start + note_length] += rng.uniform(0.3, 1.0) * _note(
            note_length, sample_rate_hz, config, rng
        )
    dry += config.noise_level * _band_noise(length, sample_rate_hz, rng)
    if stereo:
        pan = rng.uniform(0.0, 1.0)
        gains = np.array([math.cos(pan * math.pi / 2), math.sin(pan * math.pi / 2)])
        delays = rng.integers(
            int(0.003 * sample_rate_hz), int(0.02 * sample_rate_hz), size=2
        )
        ambience = np.stack(
            [np.concatenate([np.zeros(delay), dry[: length - delay]]) for delay in delays]
        )
        samples = gains[:, None] * dry[None, :] + config.ambience_level * ambience
    else:
        samples = dry[None, :]
    peak = np.abs(samples).max()
    if peak > 0:
        samples = samples * (config.peak / peak)
    return AudioBuffer(samples=torch.from_numpy(samples).float(), sample_rate_hz=sample_rate_hz)


def synthetic_corpus(
    config: CorpusSection, sample_rate_hz: int, seed: int
) -> Corpus:
    clips = [
        synthesize_clip(
            seed=seed * 100_003 + i,
            seconds=config.clip_seconds,
            sample_rate_hz=sample_rate_hz,
            stereo=config.stereo,
            config=config.synthetic,
        )
        for i in range(config.clips)
    ]
    return Corpus(
        name="synthetic",
        clips=clips,
        names=[f"synthetic-{i:04d}" for i in range(config.clips)],
    )


def load_wav_directory(
    directory: str, sample_rate_hz: int, stereo: bool = False
) -> Corpus:
    """
    Reads every .wav file in a directory in name order, resampled to sample_rate_hz.
    """
    if not os.path.isdir(directory):
        raise DataError(f"Corpus directory {directory} does not exist")
    names = sorted(f for f in os.listdir(directory) if f.lower().endswith(".wav"))
    if not names:
        raise DataError(f"No .wav files in {directory}")
    clips = []
    for name in names:
        audio = read_wav(os.path.join(directory, name))
        if audio.sample_rate_hz != sample_rate_hz:
            audio = resample_sinc(audio, sample_rate_hz)
        if stereo and audio.channels != 2:
            raise DataError(f"{name} is not stereo")
        if not stereo and audio.channels == 2:
            audio = downmix_to_mono(audio)
        clips.append(audio)
    logger.info(f"Loaded {len(clips)} clips from {directory=}.")
    return Corpus(name=os.path.basename(os.path.normpath(directory)), clips=clips, names=names)


def load_corpus(config: CorpusSection, sample_rate_hz: int, seed: int) -> Corpus:
    if config.source == "directory":
        if config.directory is None:
            raise DataError("corpus.directory is required for a directory corpus")
        return load_wav_directory(config.directory, sample_rate_hz, stereo=config.stereo)
    return synthetic_corpus(config, sample_rate_hz=sample_rate_hz, seed=seed)


def split_corpus(corpus: Corpus, test_fraction: float, seed: int) -> Tuple[Corpus, Corpus]:
    if len(corpus) < 2:
        raise EmptyInputError(f"Corpus {corpus.name} needs at least two clips to split")
    train_indices, test_indices = train_test_split(
        np.arange(len(corpus)), test_size=test_fraction, random_state=seed
    )
    train_indices, test_indices = sorted(train_indices), sorted(test_indices)
    return (
        Corpus(
            name=f"{corpus.name}-train",
            clips=[corpus.clips[i] for i in train_indices],
            names=[corpus.names[i] for i in train_indices],
        ),
        Corpus(
            name=f"{corpus.name}-test",
            clips=[corpus.clips[i] for i in test_indices],
            names=[corpus.names[i] for i in test_indices],
        ),
    )


def chunk_corpus(clips: Sequence[AudioBuffer], chunk_seconds: float) -> List[AudioBuffer]:
    chunks = [chunk for clip in clips for chunk in chunk_audio(clip, chunk_seconds)]
    if not chunks:
        raise EmptyInputError(f"No clip is at least {chunk_seconds} s long")
    return chunks
