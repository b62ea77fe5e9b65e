import logging
import math
from dataclasses import asdict, dataclass, field
from typing import List, Sequence, Tuple

import torch
from tqdm import tqdm

from src.autoencoders.base import AutoencoderSpec, FrozenAutoencoder
from src.evaluation.spectral import STFTDistanceConfig, multi_resolution_stft_distance
from src.exceptions import EmptyInputError, SampleRateError
from src.latents.types import AudioBuffer
from src.objectives import gaussian_kl
from src.utils import make_generator, set_seed

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ToyVAEConfig:
    """
    Desk-scale stand-in for a pre-trained audio VAE. The encoder is a stack of
    strided 1-D convolutions whose strides multiply to the downsample factor.
    """

    sample_rate_hz: int = 8000
    downsample_factor: int = 64
    latent_channels: int = 16
    strides: Tuple[int, ...] = (4, 4, 4)
    encoder_widths: Tuple[int, ...] = (32, 64, 128)
    decoder_widths: Tuple[int, ...] = (128, 64, 32)
    kl_weight: float = 1e-4
    waveform_weight: float = 1.0
    stft_weight: float = 1.0
    learning_rate: float = 2e-3
    batch_size: int = 8
    segment_seconds: float = 0.5
    stft_resolutions: Tuple[Tuple[int, int, int], ...] = field(
        default=((128, 16, 64), (256, 32, 128), (512, 64, 256))
    )

    def __post_init__(self):
        object.__setattr__(self, "strides", tuple(self.strides))
        object.__setattr__(self, "encoder_widths", tuple(self.encoder_widths))
        object.__setattr__(self, "decoder_widths", tuple(self.decoder_widths))
        object.__setattr__(
            self, "stft_resolutions", tuple(tuple(r) for r in self.stft_resolutions)
        )
        if math.prod(self.strides) != self.downsample_factor:
            raise ValueError(
                f"Product of {self.strides=} must equal {self.downsample_factor=}"
            )
        if any(stride < 2 or stride % 2 for stride in self.strides):
            raise ValueError(f"{self.strides=} must all be even and at least 2")
        if not (len(self.encoder_widths) == len(self.decoder_widths) == len(self.strides)):
            raise ValueError("One encoder and one decoder width is needed per stride")
        if any(width < 1 for width in self.encoder_widths + self.decoder_widths):
            raise ValueError("Widths must be positive")
        for name in ("kl_weight", "waveform_weight", "stft_weight"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def spec(self) -> AutoencoderSpec:
        return AutoencoderSpec(
            sample_rate_hz=self.sample_rate_hz,
            downsample_factor=self.downsample_factor,
            latent_channels=self.latent_channels,
            variational=True,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def tiny() -> "ToyVAEConfig":
        return ToyVAEConfig()

    @staticmethod
    def paper() -> "ToyVAEConfig":
        return ToyVAEConfig(
            sample_rate_hz=44100,
            downsample_factor=1024,
            latent_channels=64,
            strides=(4, 4, 4, 4, 4),
            encoder_widths=(32, 64, 128, 256, 256),
            decoder_widths=(256, 256, 128, 64, 32),
            segment_seconds=1.0,
            stft_resolutions=((512, 50, 240), (1024, 120, 600), (2048, 240, 1200)),
        )


class ToyVAE(torch.nn.Module, FrozenAutoencoder):
    """
    B is the batch size
    L is the number of waveform samples
    C is the number of latent channels
    T is the number of latent frames
    """

    log_sigma_bounds = (-10.0, 4.0)

    def __init__(self, config: ToyVAEConfig):
        super().__init__()
        self.config = config
        self.frozen = False

        encoder = [torch.nn.Conv1d(1, config.encoder_widths[0], 7, padding=3)]
        in_width = config.encoder_widths[0]
        for stride, width in zip(config.strides, config.encoder_widths):
            encoder.extend(
                [
                    torch.nn.ELU(),
                    torch.nn.Conv1d(
                        in_width, width, 2 * stride, stride=stride, padding=stride // 2
                    ),
                ]
            )
            in_width = width
        encoder.extend(
            [
                torch.nn.ELU(),
                torch.nn.Conv1d(in_width, 2 * config.latent_channels, 3, padding=1),
            ]
        )
        self.encoder = torch.nn.Sequential(*encoder)

        decoder = [
            torch.nn.Conv1d(
                config.latent_channels, config.decoder_widths[0], 7, padding=3
            )
        ]
        in_width = config.decoder_widths[0]
        for stride, width in zip(reversed(config.strides), config.decoder_widths):
            decoder.extend(
                [
                    torch.nn.ELU(),
                    torch.nn.ConvTranspose1d(
                        in_width, width, 2 * stride, stride=stride, padding=stride // 2
                    ),
                ]
            )
            in_width = width
        decoder.extend([torch.nn.ELU(), torch.nn.Conv1d(in_width, 1, 7, padding=3)])
        self.decoder = torch.nn.Sequential(*decoder)

    @property
    def spec(self) -> AutoencoderSpec:
        return self.config.spec

    def freeze(self) -> "ToyVAE":
        self.eval()
        self.requires_grad_(False)
        self.frozen = True
        return self

    def posterior(self, x: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        """
        :param x: waveforms of size (B, L)
        :return: posterior mean and log standard deviation, each of size (B, C, T)
        """
        x = x.to(self.encoder[0].weight.dtype)
        remainder = x.shape[-1] % self.config.downsample_factor
        if remainder:
            x = torch.nn.functional.pad(
                x, (0, self.config.downsample_factor - remainder)
            )
        h = self.encoder(x[:, None, :])
        mu, log_sigma = torch.chunk(h, 2, dim=1)
        return mu, torch.clamp(log_sigma, *self.log_sigma_bounds)

    def encode_tensor(self, x: torch.Tensor) -> torch.Tensor:
        # posterior mean, no sampling
        mu, _ = self.posterior(x)
        return mu

    def decode_tensor(self, z: torch.Tensor) -> torch.Tensor:
        return self.decoder(z.to(self.decoder[0].weight.dtype))[:, 0, :]


def _mono_clips(corpus: Sequence[AudioBuffer], sample_rate_hz: int) -> List[torch.Tensor]:
    clips = []
    for audio in corpus:
        if audio.sample_rate_hz != sample_rate_hz:
            raise SampleRateError(
                f"Corpus clip at {audio.sample_rate_hz} Hz, autoencoder expects {sample_rate_hz} Hz"
            )
        clips.extend(audio.samples[i].float() for i in range(audio.channels))
    return clips


def train_toy_vae(
    config: ToyVAEConfig,
    corpus: Sequence[AudioBuffer],
    steps: int,
    seed: int,
) -> Tuple[ToyVAE, List[float]]:
    """
    Trains the stand-in autoencoder with waveform L1, multi-resolution STFT and KL terms.
    Stereo clips contribute each channel as a separate mono clip.

    :param config: architecture and recipe
    :param corpus: training audio at config.sample_rate_hz
    :param steps: number of optimiser steps
    :param seed: seed for initialisation, cropping and posterior sampling
    :return: frozen model and the per-step reconstruction loss (waveform + STFT terms)
    """
    if steps < 1:
        raise ValueError(f"{steps=} must be at least 1")
    if len(corpus) == 0:
        raise EmptyInputError("Cannot train the autoencoder on an empty corpus")
    clips = _mono_clips(corpus, config.sample_rate_hz)
    shortest = min(clip.shape[0] for clip in clips)
    segment = min(int(round(config.segment_seconds * config.sample_rate_hz)), shortest)
    segment = (segment // config.downsample_factor) * config.downsample_factor
    if segment < config.downsample_factor:
        raise EmptyInputError(
            f"Shortest clip has {shortest} samples, fewer than one latent frame"
        )
    stft_config = STFTDistanceConfig(resolutions=config.stft_resolutions)

    set_seed(seed)
    model = ToyVAE(config)
    model.train()
    generator = make_generator(seed)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    losses = []
    for _ in tqdm(range(steps), desc="Toy VAE Step"):
        clip_indices = torch.randint(
            len(clips), (config.batch_size,), generator=generator
        ).tolist()
        crops = []
        for i in clip_indices:
            offset = int(
                torch.randint(clips[i].shape[0] - segment + 1, (1,), generator=generator)
            )
            crops.append(clips[i][offset : offset + segment])
        x = torch.stack(crops)  # (B, L)
        mu, log_sigma = model.posterior(x)
        z = mu + torch.exp(log_sigma) * torch.randn(mu.shape, generator=generator).to(mu)
        x_hat = model.decode_tensor(z)[:, :segment]
        reconstruction = config.waveform_weight * (x_hat - x).abs().mean()
        reconstruction = reconstruction + config.stft_weight * multi_resolution_stft_distance(
            reference=x, estimate=x_hat, config=stft_config
        )
        loss = reconstruction + config.kl_weight * gaussian_kl(mu, log_sigma)
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        losses.append(reconstruction.item())
    logger.info(
        f"Trained toy VAE for {steps=}: reconstruction loss {losses[0]:.4f} -> {losses[-1]:.4f}."
    )
    return model.freeze(), losses
