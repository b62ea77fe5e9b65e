from dataclasses import asdict, dataclass
from typing import Optional, Tuple

import torch

from src.exceptions import DimensionError, EmptyInputError
from src.latents.types import StackedLatent
from src.networks.convnext import ConvNeXtV2Block
from src.samplers import ConditionVector, reparameterize

LOG_SIGMA_BOUNDS = (-8.0, 8.0)


@dataclass(frozen=True)
class ConditioningEncoderSpec:
    num_blocks: int = 2
    hidden_dim: int = 768
    input_channels: int = 128
    output_dim: int = 64
    expansion: int = 2
    dw_kernel: int = 7

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value < 1:
                raise ValueError(f"{name}={value} must be positive")

    @staticmethod
    def for_latent(
        latent_channels: int, output_dim: int, hidden_dim: int = 768, num_blocks: int = 2
    ) -> "ConditioningEncoderSpec":
        return ConditioningEncoderSpec(
            num_blocks=num_blocks,
            hidden_dim=hidden_dim,
            input_channels=2 * latent_channels,
            output_dim=output_dim,
        )

    def to_dict(self) -> dict:
        return asdict(self)


class ConditioningEncoder(torch.nn.Module):
    """
    Summarises a stacked stereo latent into one global Gaussian over the condition space.

    B is the batch size
    C is the number of latent channels
    T is the number of frames
    H is the condition dimension
    """

    def __init__(self, spec: ConditioningEncoderSpec):
        super().__init__()
        self.spec = spec
        self.input_projection = torch.nn.Conv1d(spec.input_channels, spec.hidden_dim, 1)
        self.blocks = torch.nn.ModuleList(
            [
                ConvNeXtV2Block(
                    dim=spec.hidden_dim,
                    expansion=spec.expansion,
                    kernel_size=spec.dw_kernel,
                )
                for _ in range(spec.num_blocks)
            ]
        )
        self.mu_head = torch.nn.Linear(spec.hidden_dim, spec.output_dim)
        self.log_sigma_head = torch.nn.Linear(spec.hidden_dim, spec.output_dim)

    def forward(self, z: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        """
        :param z: stacked latents of size (B, 2, C, T)
        :return: mu and log sigma, each of size (B, H)
        """
        if z.ndim != 4 or z.shape[1] * z.shape[2] != self.spec.input_channels:
            raise DimensionError(
                f"Expected stacked latents with {self.spec.input_channels} channels in total, "
                f"got {tuple(z.shape)}"
            )
        if z.shape[-1] == 0:
            raise EmptyInputError("Cannot pool a latent with zero frames")
        h = self.input_projection(z.flatten(1, 2))
        for block in self.blocks:
            h = block(h)
        pooled = h.mean(dim=-1)
        log_sigma = torch.clamp(self.log_sigma_head(pooled), *LOG_SIGMA_BOUNDS)
        return self.mu_head(pooled), log_sigma

    def condition(
        self, z: torch.Tensor, generator: Optional[torch.Generator] = None
    ) -> ConditionVector:
        """
        Reparameterised batch of conditions, differentiable with respect to the encoder.
        """
        mu, log_sigma = self.forward(z)
        return reparameterize(mu=mu, sigma=torch.exp(log_sigma), generator=generator)

    def encode(
        self, z_tgt: StackedLatent, generator: Optional[torch.Generator] = None
    ) -> ConditionVector:
        dtype = self.mu_head.weight.dtype
        with torch.no_grad():
            return self.condition(z_tgt.data[None].to(dtype), generator).item(0)


def transfer_condition(
    encoder: ConditioningEncoder, reference: StackedLatent
) -> ConditionVector:
    """
    Posterior-mean condition of a reference stereo latent, used to carry its spatial
    character over to another mono input.
    """
    dtype = encoder.mu_head.weight.dtype
    with torch.no_grad():
        mu, _ = encoder(reference.data[None].to(dtype))
    return ConditionVector.deterministic(mu[0])
