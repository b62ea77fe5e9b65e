"""
RELT latent files.

A fixed 40-byte little-endian header followed by a row-major float32 payload:

    magic      4s   b"RELT"
    version    u32  1
    streams    u32  0 for a single latent sequence, S for a stacked latent
    channels   u32  C
    frames     u32  T
    frame_rate f64  latent frames per second
    dtype      u32  1 (float32)
    reserved   8 bytes of zeros
"""
import logging
import struct
from typing import Union

import numpy as np
import torch

from src.exceptions import LatentFormatError
from src.latents.types import LatentSequence, StackedLatent

logger = logging.getLogger(__name__)

MAGIC = b"RELT"
VERSION = 1
HEADER = struct.Struct("<4sIIIIdI8x")
DTYPE_CODES = {1: np.dtype("<f4")}


def write_latent_file(path: str, latent: Union[LatentSequence, StackedLatent]) -> None:
    if isinstance(latent, StackedLatent):
        streams, channels, frames = latent.data.shape
    elif isinstance(latent, LatentSequence):
        streams = 0
        channels, frames = latent.data.shape
    else:
        raise TypeError(f"Cannot write latent of type {type(latent)}")
    header = HEADER.pack(
        MAGIC, VERSION, streams, channels, frames, latent.frame_rate_hz, 1
    )
    payload = latent.numpy().astype(DTYPE_CODES[1], copy=False).tobytes(order="C")
    with open(path, "wb") as file:
        file.write(header)
        file.write(payload)
    logger.debug(f"Wrote latent to {path=} with {streams=}, {channels=}, {frames=}.")


def read_latent_file(path: str) -> Union[LatentSequence, StackedLatent]:
    with open(path, "rb") as file:
        content = file.read()
    if len(content) < HEADER.size:
        raise LatentFormatError(
            "header", f"file has {len(content)} bytes, header needs {HEADER.size}"
        )
    magic, version, streams, channels, frames, frame_rate, dtype_code = HEADER.unpack(
        content[: HEADER.size]
    )
    if magic != MAGIC:
        raise LatentFormatError("magic", f"expected {MAGIC!r}, found {magic!r}")
    if version != VERSION:
        raise LatentFormatError("version", f"unsupported version {version}")
    if dtype_code not in DTYPE_CODES:
        raise LatentFormatError("dtype", f"unknown dtype code {dtype_code}")
    if channels < 1:
        raise LatentFormatError("channels", f"must be positive, found {channels}")
    if frames < 1:
        raise LatentFormatError("frames", f"must be positive, found {frames}")
    if not frame_rate > 0:
        raise LatentFormatError("frame_rate", f"must be positive, found {frame_rate}")
    dtype = DTYPE_CODES[dtype_code]
    shape = (channels, frames) if streams == 0 else (streams, channels, frames)
    expected_bytes = int(np.prod(shape)) * dtype.itemsize
    payload = content[HEADER.size :]
    if len(payload) < expected_bytes:
        raise LatentFormatError(
            "payload",
            f"truncated, header declares {shape} ({expected_bytes} bytes) "
            f"but only {len(payload)} bytes follow",
        )
    if len(payload) > expected_bytes:
        raise LatentFormatError(
            "payload",
            f"{len(payload) - expected_bytes} trailing bytes after declared {shape}",
        )
    data = torch.from_numpy(
        np.frombuffer(payload, dtype=dtype).reshape(shape).astype(np.float32)
    )
    if streams == 0:
        return LatentSequence(data=data, frame_rate_hz=frame_rate)
    return StackedLatent(data=data, frame_rate_hz=frame_rate)
