from src.networks.condition_encoder import (
    ConditioningEncoder,
    ConditioningEncoderSpec,
    transfer_condition,
)
from src.networks.convnext import AdaptiveLayerNorm, ConvNeXtV2Block, GlobalResponseNorm
from src.networks.counting import count_flops, count_params
from src.networks.discriminator import (
    DiscriminatorOutput,
    DiscriminatorSpec,
    LatentDiscriminator,
)
from src.networks.latent_predictor import LatentPredictor, ModelSpec

__all__ = [
    "AdaptiveLayerNorm",
    "ConditioningEncoder",
    "ConditioningEncoderSpec",
    "ConvNeXtV2Block",
    "DiscriminatorOutput",
    "DiscriminatorSpec",
    "GlobalResponseNorm",
    "LatentDiscriminator",
    "LatentPredictor",
    "ModelSpec",
    "count_flops",
    "count_params",
    "transfer_condition",
]
