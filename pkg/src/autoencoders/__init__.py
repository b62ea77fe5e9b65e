from src.autoencoders.base import (
    AUTOENCODER_PRESETS,
    PAPER_AUTOENCODER_SPEC,
    TINY_AUTOENCODER_SPEC,
    AutoencoderSpec,
    FrozenAutoencoder,
)
from src.autoencoders.toy_vae import ToyVAE, ToyVAEConfig, train_toy_vae

__all__ = [
    "AUTOENCODER_PRESETS",
    "AutoencoderSpec",
    "FrozenAutoencoder",
    "PAPER_AUTOENCODER_SPEC",
    "TINY_AUTOENCODER_SPEC",
    "ToyVAE",
    "ToyVAEConfig",
    "train_toy_vae",
]
