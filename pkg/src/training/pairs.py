from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import torch

from src.autoencoders.base import FrozenAutoencoder
from src.exceptions import DimensionError, EmptyInputError
from src.latents.types import AudioBuffer, LatentSequence, StackedLatent
from src.signal_ops.resampling import degrade_bandwidth
from src.signal_ops.stereo import downmix_to_mono


@dataclass(frozen=True)
class TrainingPair:
    z_in: LatentSequence
    z_tgt: Union[LatentSequence, StackedLatent]
    source: Optional[str] = None

    def __post_init__(self):
        if self.z_in.frames != self.z_tgt.frames:
            raise DimensionError(
                f"Input has {self.z_in.frames} frames, target has {self.z_tgt.frames}"
            )
        if self.z_in.frame_rate_hz != self.z_tgt.frame_rate_hz:
            raise DimensionError(
                f"Frame rates differ: {self.z_in.frame_rate_hz} and {self.z_tgt.frame_rate_hz}"
            )

    @property
    def stacked(self) -> bool:
        return isinstance(self.z_tgt, StackedLatent)


def make_bwe_pair(
    frozen_ae: FrozenAutoencoder,
    x_fullband: AudioBuffer,
    factor: int = 2,
    source: Optional[str] = None,
) -> TrainingPair:
    """
    Latent pair for bandwidth extension: the input is the encoding of a sinc
    down/up-sampled copy of the chunk, the target the encoding of the chunk itself.
    """
    if x_fullband.channels != 1:
        raise DimensionError(
            f"Bandwidth extension pairs are built from mono audio, got {x_fullband.channels} channels"
        )
    x_in = degrade_bandwidth(x_fullband, factor=factor)
    return TrainingPair(
        z_in=frozen_ae.encode(x_in),
        z_tgt=frozen_ae.encode(x_fullband),
        source=source,
    )


def make_m2s_pair(
    frozen_ae: FrozenAutoencoder,
    x_stereo: AudioBuffer,
    source: Optional[str] = None,
) -> TrainingPair:
    """
    Latent pair for mono-to-stereo: the input encodes the (L + R) / 2 downmix,
    the target stacks the left and right encodings.
    """
    if x_stereo.channels != 2:
        raise DimensionError(
            f"Mono-to-stereo pairs are built from stereo audio, got {x_stereo.channels} channel"
        )
    return TrainingPair(
        z_in=frozen_ae.encode(downmix_to_mono(x_stereo)),
        z_tgt=frozen_ae.encode_stereo(x_stereo),
        source=source,
    )


def collate(pairs: Sequence[TrainingPair]) -> Tuple[torch.Tensor, torch.Tensor]:
    """
    :return: inputs of size (B, C, T) and targets of size (B, C, T) or (B, S, C, T)
    """
    if len(pairs) == 0:
        raise EmptyInputError("Cannot collate an empty batch")
    shapes = {(pair.z_in.data.shape, pair.z_tgt.data.shape) for pair in pairs}
    if len(shapes) != 1:
        raise DimensionError(f"Pairs in a batch must share shapes, got {sorted(shapes)}")
    return (
        torch.stack([pair.z_in.data for pair in pairs]),
        torch.stack([pair.z_tgt.data for pair in pairs]),
    )
