import torch

from src.autoencoders.base import AutoencoderSpec, FrozenAutoencoder
from src.utils import make_generator

MOCK_AUTOENCODER_SPEC = AutoencoderSpec(
    sample_rate_hz=8000, downsample_factor=16, latent_channels=16
)


class MockAutoencoder(FrozenAutoencoder):
    """
    A deterministic linear autoencoder used for testing. Each frame of downsample_factor
    samples is projected onto latent_channels orthonormal rows, so encoding followed by
    decoding is exact when latent_channels equals downsample_factor.
    """

    def __init__(self, spec: AutoencoderSpec = MOCK_AUTOENCODER_SPEC, seed: int = 0):
        if spec.latent_channels > spec.downsample_factor:
            raise ValueError("Mock autoencoder needs latent_channels <= downsample_factor")
        self.spec = spec
        q, _ = torch.linalg.qr(
            torch.randn(
                spec.downsample_factor,
                spec.downsample_factor,
                generator=make_generator(seed),
                dtype=torch.float64,
            )
        )
        self.projection = q[: spec.latent_channels].float()  # (C, D)

    def encode_tensor(self, x: torch.Tensor) -> torch.Tensor:
        remainder = x.shape[-1] % self.spec.downsample_factor
        if remainder:
            x = torch.nn.functional.pad(x, (0, self.spec.downsample_factor - remainder))
        frames = x.float().reshape(x.shape[0], -1, self.spec.downsample_factor)
        return torch.einsum("cd,btd->bct", self.projection, frames)

    def decode_tensor(self, z: torch.Tensor) -> torch.Tensor:
        frames = torch.einsum("cd,bct->btd", self.projection, z.float())
        return frames.reshape(z.shape[0], -1)
