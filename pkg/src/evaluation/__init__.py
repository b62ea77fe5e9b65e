from src.evaluation.comparisons import banded_metrics, mean_metrics, stereo_metrics
from src.evaluation.reports import (
    EvalReport,
    EvalRow,
    emit_report,
    format_table,
    load_report,
)
from src.evaluation.spectral import (
    MelDistanceConfig,
    STFTDistanceConfig,
    mel_distance,
    multi_resolution_stft_distance,
    stft_distance,
)
from src.evaluation.sweep import SweepResult, interpolation_sweep

__all__ = [
    "EvalReport",
    "EvalRow",
    "MelDistanceConfig",
    "STFTDistanceConfig",
    "SweepResult",
    "banded_metrics",
    "emit_report",
    "format_table",
    "interpolation_sweep",
    "load_report",
    "mean_metrics",
    "mel_distance",
    "multi_resolution_stft_distance",
    "stereo_metrics",
    "stft_distance",
]
