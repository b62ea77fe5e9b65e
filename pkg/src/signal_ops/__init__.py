from src.signal_ops.chunking import chunk_audio
from src.signal_ops.filters import BandSplitConfig, band_split
from src.signal_ops.resampling import degrade_bandwidth, resample_sinc
from src.signal_ops.stereo import (
    channel_log_energy_ratio,
    downmix_to_mono,
    from_mid_side,
    swap_channels,
    to_mid_side,
)

__all__ = [
    "BandSplitConfig",
    "band_split",
    "channel_log_energy_ratio",
    "chunk_audio",
    "degrade_bandwidth",
    "downmix_to_mono",
    "from_mid_side",
    "resample_sinc",
    "swap_channels",
    "to_mid_side",
]
