from dataclasses import asdict, dataclass
from typing import Literal, Optional, Union

import torch

from src.exceptions import DimensionError, NonFiniteError
from src.latents.types import LatentSequence, StackedLatent
from src.networks.convnext import ConvNeXtV2Block
from src.samplers import ConditionVector


@dataclass(frozen=True)
class ModelSpec:
    variant: Literal["S", "M", "custom"] = "M"
    num_blocks: int = 8
    hidden_dim: int = 768
    expansion: int = 2
    latent_channels_in: int = 64
    latent_channels_out: int = 64
    conditioned: bool = False
    condition_dim: int = 64
    dw_kernel: int = 7
    output_streams: int = 1

    def __post_init__(self):
        if self.variant not in ("S", "M", "custom"):
            raise ValueError(f"Unknown {self.variant=}")
        for name in (
            "num_blocks",
            "hidden_dim",
            "expansion",
            "latent_channels_in",
            "latent_channels_out",
            "dw_kernel",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name}={getattr(self, name)} must be positive")
        if self.dw_kernel % 2 != 1:
            raise ValueError(f"{self.dw_kernel=} must be odd")
        if self.conditioned and self.condition_dim < 1:
            raise ValueError(f"Conditioned model needs condition_dim > 0, got {self.condition_dim}")
        if self.output_streams not in (1, 2):
            raise ValueError(f"{self.output_streams=} must be 1 or 2")

    @staticmethod
    def small(latent_channels: int = 64) -> "ModelSpec":
        return ModelSpec(
            variant="S",
            num_blocks=4,
            hidden_dim=512,
            latent_channels_in=latent_channels,
            latent_channels_out=latent_channels,
        )

    @staticmethod
    def medium(latent_channels: int = 64) -> "ModelSpec":
        return ModelSpec(
            variant="M",
            num_blocks=8,
            hidden_dim=768,
            latent_channels_in=latent_channels,
            latent_channels_out=latent_channels,
        )

    @staticmethod
    def stereo(latent_channels: int = 64, condition_dim: int = 64) -> "ModelSpec":
        return ModelSpec(
            variant="M",
            num_blocks=8,
            hidden_dim=768,
            latent_channels_in=latent_channels,
            latent_channels_out=latent_channels,
            conditioned=True,
            condition_dim=condition_dim,
            output_streams=2,
        )

    @staticmethod
    def tiny(
        latent_channels: int = 16,
        conditioned: bool = False,
        condition_dim: int = 8,
    ) -> "ModelSpec":
        return ModelSpec(
            variant="custom",
            num_blocks=2,
            hidden_dim=64,
            latent_channels_in=latent_channels,
            latent_channels_out=latent_channels,
            conditioned=conditioned,
            condition_dim=condition_dim,
            output_streams=2 if conditioned else 1,
        )

    def to_dict(self) -> dict:
        return asdict(self)


class LatentPredictor(torch.nn.Module):
    """
    Maps an input latent to a target latent: 1x1 input projection, ConvNeXt-V2 blocks
    and a 1x1 output projection. With two output streams the projection emits 2C channels
    which are reshaped to a left/right stack.

    B is the batch size
    C is the number of latent channels
    T is the number of frames
    H is the condition dimension
    """

    def __init__(self, spec: ModelSpec):
        super().__init__()
        self.spec = spec
        self.input_projection = torch.nn.Conv1d(
            spec.latent_channels_in, spec.hidden_dim, 1
        )
        self.blocks = torch.nn.ModuleList(
            [
                ConvNeXtV2Block(
                    dim=spec.hidden_dim,
                    expansion=spec.expansion,
                    kernel_size=spec.dw_kernel,
                    condition_dim=spec.condition_dim if spec.conditioned else None,
                )
                for _ in range(spec.num_blocks)
            ]
        )
        self.output_projection = torch.nn.Conv1d(
            spec.hidden_dim, spec.output_streams * spec.latent_channels_out, 1
        )

    def forward(
        self, z: torch.Tensor, condition: Optional[torch.Tensor] = None
    ) -> torch.Tensor:
        """
        :param z: input latents of size (B, C_in, T)
        :param condition: condition samples of size (B, H), required iff the model is conditioned
        :return: (B, C_out, T) for one output stream, (B, 2, C_out, T) for two
        """
        if z.ndim != 3 or z.shape[1] != self.spec.latent_channels_in:
            raise DimensionError(
                f"Expected input of size (B, {self.spec.latent_channels_in}, T), got {tuple(z.shape)}"
            )
        if self.spec.conditioned and condition is None:
            raise ValueError("Conditioned model requires a condition")
        if not self.spec.conditioned and condition is not None:
            raise ValueError("Unconditioned model does not accept a condition")
        if condition is not None:
            if condition.ndim != 2 or condition.shape != (z.shape[0], self.spec.condition_dim):
                raise DimensionError(
                    f"Expected condition of size ({z.shape[0]}, {self.spec.condition_dim}), "
                    f"got {tuple(condition.shape)}"
                )
            condition = condition.to(z)
        h = self.input_projection(z)
        for block in self.blocks:
            h = block(h, condition)
        out = self.output_projection(h)
        if self.spec.output_streams == 1:
            return out
        return out.reshape(
            z.shape[0], self.spec.output_streams, self.spec.latent_channels_out, -1
        )

    def predict(
        self,
        z_in: LatentSequence,
        c: Optional[ConditionVector] = None,
    ) -> Union[LatentSequence, StackedLatent]:
        """
        Forward pass on a single sequence without gradients.
        """
        if not bool(torch.isfinite(z_in.data).all()):
            raise NonFiniteError("Input latent contains non-finite values")
        if z_in.channels != self.spec.latent_channels_in:
            raise DimensionError(
                f"Model expects {self.spec.latent_channels_in} channels, got {z_in.channels}"
            )
        condition = None if c is None else c.as_batch().sample
        dtype = self.output_projection.weight.dtype
        with torch.no_grad():
            out = self.forward(z_in.data[None].to(dtype), condition)[0]
        if self.spec.output_streams == 1:
            return LatentSequence(data=out, frame_rate_hz=z_in.frame_rate_hz)
        return StackedLatent(data=out, frame_rate_hz=z_in.frame_rate_hz)
