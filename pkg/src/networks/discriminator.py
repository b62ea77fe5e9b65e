from dataclasses import asdict, dataclass, field
from typing import List, Tuple

import torch

from src.exceptions import DimensionError, SequenceTooShortError
from src.latents.types import LatentSequence


@dataclass(frozen=True)
class DiscriminatorSpec:
    num_layers: int = 6
    kernel_sizes: Tuple[Tuple[int, int], ...] = field(
        default=((3, 7), (3, 7), (3, 7), (3, 7), (3, 7), (3, 3))
    )
    stride: Tuple[int, int] = (1, 1)
    padding: Tuple[int, int] = (1, 1)
    internal_channels: int = 256
    input_channels: int = 1
    output_channels: int = 1
    negative_slope: float = 0.2
    init_std: float = 0.02

    def __post_init__(self):
        object.__setattr__(self, "kernel_sizes", tuple(tuple(k) for k in self.kernel_sizes))
        object.__setattr__(self, "stride", tuple(self.stride))
        object.__setattr__(self, "padding", tuple(self.padding))
        if len(self.kernel_sizes) != self.num_layers:
            raise ValueError(
                f"{self.num_layers=} layers need as many kernel sizes, got {len(self.kernel_sizes)}"
            )
        if self.internal_channels < 1:
            raise ValueError(f"{self.internal_channels=} must be positive")

    @staticmethod
    def tiny() -> "DiscriminatorSpec":
        return DiscriminatorSpec(internal_channels=32)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class DiscriminatorOutput:
    """
    score_map is of size (B, C', T')
    features holds one map per layer, each of size (B, channels, h, w),
    post-activation except for the last which is the raw output map
    """

    score_map: torch.Tensor
    features: List[torch.Tensor]


def _conv_output_size(size: int, kernel: int, stride: int, padding: int) -> int:
    return (size + 2 * padding - kernel) // stride + 1


class LatentDiscriminator(torch.nn.Module):
    """
    Treats a latent of size (C, T) as a one-channel image and scores it with a Conv2d stack.
    """

    def __init__(self, spec: DiscriminatorSpec = DiscriminatorSpec()):
        super().__init__()
        self.spec = spec
        layers = []
        in_channels = spec.input_channels
        for i, kernel_size in enumerate(spec.kernel_sizes):
            last = i == spec.num_layers - 1
            out_channels = spec.output_channels if last else spec.internal_channels
            conv = torch.nn.Conv2d(
                in_channels,
                out_channels,
                kernel_size,
                stride=spec.stride,
                padding=spec.padding,
            )
            torch.nn.init.normal_(conv.weight, mean=0.0, std=spec.init_std)
            torch.nn.init.zeros_(conv.bias)
            layers.append(conv)
            in_channels = out_channels
        self.layers = torch.nn.ModuleList(layers)
        self.activation = torch.nn.LeakyReLU(spec.negative_slope)

    def output_shapes(self, height: int, width: int) -> List[Tuple[int, int]]:
        """
        Feature map sizes per layer for an input of size (height, width).
        Raises before any computation if a layer would produce an empty map.
        """
        shapes = []
        for kernel_size in self.spec.kernel_sizes:
            height, width = [
                _conv_output_size(size, kernel, stride, padding)
                for size, kernel, stride, padding in zip(
                    (height, width), kernel_size, self.spec.stride, self.spec.padding
                )
            ]
            shapes.append((height, width))
        for i, (height, width) in enumerate(shapes):
            if height < 1 or width < 1:
                raise SequenceTooShortError(
                    f"Layer {i + 1} would produce a ({height}, {width}) map; the latent is too short"
                )
        return shapes

    def forward(self, z: torch.Tensor) -> DiscriminatorOutput:
        """
        :param z: latents of size (B, C, T)
        """
        if z.ndim != 3:
            raise DimensionError(f"Expected latents of size (B, C, T), got {tuple(z.shape)}")
        self.output_shapes(z.shape[1], z.shape[2])
        h = z[:, None, :, :]
        features = []
        for i, layer in enumerate(self.layers):
            h = layer(h)
            if i < len(self.layers) - 1:
                h = self.activation(h)
            features.append(h)
        return DiscriminatorOutput(score_map=h[:, 0], features=features)

    def score(self, z: LatentSequence) -> DiscriminatorOutput:
        with torch.no_grad():
            return self.forward(z.data[None].to(self.layers[0].weight.dtype))
