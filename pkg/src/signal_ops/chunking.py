from typing import List, Optional

from src.latents.types import AudioBuffer


def chunk_audio(
    x: AudioBuffer,
    duration_s: float,
    hop_s: Optional[float] = None,
) -> List[AudioBuffer]:
    """
    Fixed-length chunks; the final partial chunk is dropped.

    :param x: audio to chunk
    :param duration_s: chunk duration in seconds
    :param hop_s: hop between chunk starts in seconds, defaults to duration_s
    :return: list of chunks, empty if the audio is shorter than one chunk
    """
    if duration_s <= 0:
        raise ValueError(f"{duration_s=} must be positive")
    hop_s = duration_s if hop_s is None else hop_s
    if hop_s <= 0:
        raise ValueError(f"{hop_s=} must be positive")
    chunk_length = int(round(duration_s * x.sample_rate_hz))
    hop_length = int(round(hop_s * x.sample_rate_hz))
    if chunk_length > x.length:
        return []
    number_of_chunks = (x.length - chunk_length) // hop_length + 1
    return [
        AudioBuffer(
            samples=x.samples[:, i * hop_length : i * hop_length + chunk_length],
            sample_rate_hz=x.sample_rate_hz,
        )
        for i in range(number_of_chunks)
    ]
