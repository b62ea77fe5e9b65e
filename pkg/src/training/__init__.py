from src.training.base import LatentTrainer
from src.training.bwe import BandwidthExtensionTrainer
from src.training.checkpoints import (
    Checkpoint,
    TrainedModels,
    checkpoint_manifest,
    load_autoencoder,
    load_checkpoint,
    load_trained_models,
    restore_checkpoint,
    save_autoencoder,
    save_checkpoint,
)
from src.training.config import TrainingConfig
from src.training.m2s import MonoToStereoTrainer
from src.training.pairs import TrainingPair, collate, make_bwe_pair, make_m2s_pair
from src.training.schedules import lr_at

__all__ = [
    "BandwidthExtensionTrainer",
    "Checkpoint",
    "LatentTrainer",
    "MonoToStereoTrainer",
    "TrainedModels",
    "TrainingConfig",
    "TrainingPair",
    "checkpoint_manifest",
    "collate",
    "load_autoencoder",
    "load_checkpoint",
    "load_trained_models",
    "lr_at",
    "make_bwe_pair",
    "make_m2s_pair",
    "restore_checkpoint",
    "save_autoencoder",
    "save_checkpoint",
]
