"""
RECK checkpoint container.

    magic     4s   b"RECK"
    version   u32  1
    metadata  u64 length, then UTF-8 JSON with sorted keys
    arrays    u32 count, then per array sorted by name:
              u16 name length, name, u8 dtype length, numpy dtype string,
              u8 ndim, ndim x u64 dims, little-endian row-major payload
"""
import hashlib
import json
import logging
import struct
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Dict, Optional

import numpy as np
import torch

from src.autoencoders.toy_vae import ToyVAE, ToyVAEConfig
from src.exceptions import ArtifactMismatchError
from src.networks.condition_encoder import ConditioningEncoder, ConditioningEncoderSpec
from src.networks.latent_predictor import LatentPredictor, ModelSpec

if TYPE_CHECKING:
    from src.training.base import LatentTrainer

logger = logging.getLogger(__name__)

MAGIC = b"RECK"
VERSION = 1
PREAMBLE = struct.Struct("<4sIQ")
COUNT = struct.Struct("<I")


@dataclass
class Checkpoint:
    metadata: Dict[str, Any]
    arrays: Dict[str, np.ndarray]

    @property
    def kind(self) -> str:
        return self.metadata["kind"]

    @property
    def step(self) -> int:
        return self.metadata.get("step", 0)

    def tensors(self, prefix: str) -> Dict[str, torch.Tensor]:
        return {
            name[len(prefix) + 1 :]: torch.from_numpy(array.copy())
            for name, array in self.arrays.items()
            if name.startswith(prefix + ".")
        }


def spec_hash(spec: Dict[str, Any]) -> str:
    return hashlib.sha256(json.dumps(spec, sort_keys=True).encode("utf-8")).hexdigest()


def _little_endian(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array)
    return array.astype(array.dtype.newbyteorder("<"), copy=False)


def write_container(path: str, checkpoint: Checkpoint) -> None:
    metadata = json.dumps(checkpoint.metadata, sort_keys=True).encode("utf-8")
    with open(path, "wb") as file:
        file.write(PREAMBLE.pack(MAGIC, VERSION, len(metadata)))
        file.write(metadata)
        file.write(COUNT.pack(len(checkpoint.arrays)))
        for name in sorted(checkpoint.arrays):
            array = _little_endian(checkpoint.arrays[name])
            encoded_name = name.encode("utf-8")
            dtype = array.dtype.str.encode("ascii")
            file.write(struct.pack("<H", len(encoded_name)) + encoded_name)
            file.write(struct.pack("<B", len(dtype)) + dtype)
            file.write(struct.pack(f"<B{array.ndim}Q", array.ndim, *array.shape))
            file.write(array.tobytes(order="C"))


def _read(buffer: memoryview, offset: int, size: int, what: str):
    if offset + size > len(buffer):
        raise ArtifactMismatchError(f"Checkpoint truncated while reading {what}")
    return bytes(buffer[offset : offset + size]), offset + size


def _unpack(buffer: memoryview, offset: int, layout: str, what: str):
    raw, offset = _read(buffer, offset, struct.calcsize(layout), what)
    return struct.unpack(layout, raw), offset


def load_checkpoint(path: str) -> Checkpoint:
    with open(path, "rb") as file:
        buffer = memoryview(file.read())
    (magic, version, metadata_length), offset = _unpack(
        buffer, 0, PREAMBLE.format, "preamble"
    )
    if magic != MAGIC:
        raise ArtifactMismatchError(f"{path} is not a checkpoint: magic {magic!r}")
    if version != VERSION:
        raise ArtifactMismatchError(
            f"Checkpoint version {version} is not supported, expected {VERSION}"
        )
    metadata, offset = _read(buffer, offset, metadata_length, "metadata")
    (count,), offset = _unpack(buffer, offset, COUNT.format, "array count")
    arrays = {}
    for _ in range(count):
        (name_length,), offset = _unpack(buffer, offset, "<H", "name length")
        name, offset = _read(buffer, offset, name_length, "array name")
        (dtype_length,), offset = _unpack(buffer, offset, "<B", "dtype length")
        dtype, offset = _read(buffer, offset, dtype_length, "dtype")
        (ndim,), offset = _unpack(buffer, offset, "<B", "rank")
        shape, offset = _unpack(buffer, offset, f"<{ndim}Q", "shape")
        dtype = np.dtype(dtype.decode("ascii"))
        payload, offset = _read(
            buffer, offset, int(np.prod(shape, dtype=np.int64)) * dtype.itemsize, "payload"
        )
        arrays[name.decode("utf-8")] = np.frombuffer(payload, dtype=dtype).reshape(shape)
    if offset != len(buffer):
        raise ArtifactMismatchError(
            f"Checkpoint has {len(buffer) - offset} trailing bytes"
        )
    return Checkpoint(metadata=json.loads(metadata.decode("utf-8")), arrays=arrays)


def save_checkpoint(trainer: "LatentTrainer", path: str) -> None:
    """
    Writes parameters, optimiser state, generator state, step counter and loss history.
    """
    spec = trainer.spec_payload()
    arrays = {}
    for module_name, module in trainer.modules().items():
        for name, tensor in module.state_dict().items():
            arrays[f"{module_name}.{name}"] = tensor.detach().cpu().numpy()
    optimizers = {}
    for optimizer_name, optimizer in trainer.optimizers().items():
        state_dict = optimizer.state_dict()
        scalars = {}
        for index, state in state_dict["state"].items():
            for key, value in state.items():
                if isinstance(value, torch.Tensor):
                    arrays[f"optimizer.{optimizer_name}.{index}.{key}"] = (
                        value.detach().cpu().numpy()
                    )
                else:
                    scalars[f"{index}.{key}"] = value
        optimizers[optimizer_name] = {
            "param_groups": state_dict["param_groups"],
            "scalars": scalars,
        }
    arrays["rng.generator"] = trainer.generator.get_state().numpy()
    metadata = {
        "kind": trainer.kind,
        "spec": spec,
        "spec_hash": spec_hash(spec),
        "config": trainer.config.to_dict(),
        "config_hash": trainer.config.hash(),
        "step": trainer.step,
        "history": trainer.history,
        "optimizers": optimizers,
    }
    write_container(path, Checkpoint(metadata=metadata, arrays=arrays))
    logger.info(f"Saved {trainer.kind} checkpoint at step {trainer.step} to {path=}.")


def _optimizer_state(checkpoint: Checkpoint, name: str) -> Dict[str, Any]:
    saved = checkpoint.metadata["optimizers"][name]
    state: Dict[int, Dict[str, Any]] = {}
    for key, tensor in checkpoint.tensors(f"optimizer.{name}").items():
        index, field = key.split(".", 1)
        state.setdefault(int(index), {})[field] = tensor
    for key, value in saved["scalars"].items():
        index, field = key.split(".", 1)
        state.setdefault(int(index), {})[field] = value
    return {"state": state, "param_groups": saved["param_groups"]}


def restore_checkpoint(trainer: "LatentTrainer", checkpoint: Checkpoint) -> None:
    """
    Loads a checkpoint into a trainer built with the same architecture.
    """
    if checkpoint.kind != trainer.kind:
        raise ArtifactMismatchError(
            f"Checkpoint holds a {checkpoint.kind!r} run, trainer is {trainer.kind!r}"
        )
    expected = spec_hash(trainer.spec_payload())
    if checkpoint.metadata["spec_hash"] != expected:
        raise ArtifactMismatchError(
            f"Checkpoint spec hash {checkpoint.metadata['spec_hash'][:12]} does not match "
            f"the trainer's {expected[:12]}"
        )
    if checkpoint.metadata["config_hash"] != trainer.config.hash():
        logger.warning("Resuming with a training config that differs from the checkpoint's.")
    for module_name, module in trainer.modules().items():
        module.load_state_dict(checkpoint.tensors(module_name))
    for optimizer_name, optimizer in trainer.optimizers().items():
        optimizer.load_state_dict(_optimizer_state(checkpoint, optimizer_name))
    trainer.generator.set_state(torch.from_numpy(checkpoint.arrays["rng.generator"].copy()))
    trainer.step = checkpoint.metadata["step"]
    trainer.history = [dict(row) for row in checkpoint.metadata["history"]]


@dataclass
class TrainedModels:
    kind: str
    predictor: LatentPredictor
    encoder: Optional[ConditioningEncoder]
    step: int
    config: Dict[str, Any]


def load_trained_models(path: str, kind: Optional[str] = None) -> TrainedModels:
    """
    Rebuilds the predictor, and the conditioning encoder for mono-to-stereo runs,
    from a trainer checkpoint, in eval mode.
    """
    checkpoint = load_checkpoint(path)
    if checkpoint.kind not in ("bwe", "m2s"):
        raise ArtifactMismatchError(f"{path} holds a {checkpoint.kind!r} artifact, not a trained model")
    if kind is not None and checkpoint.kind != kind:
        raise ArtifactMismatchError(f"{path} holds a {checkpoint.kind!r} model, expected {kind!r}")
    spec = checkpoint.metadata["spec"]
    if spec_hash(spec) != checkpoint.metadata["spec_hash"]:
        raise ArtifactMismatchError(f"Spec hash of {path} does not match its spec")
    predictor = LatentPredictor(ModelSpec(**spec["model"]))
    predictor.load_state_dict(checkpoint.tensors("predictor"))
    predictor.eval()
    encoder = None
    if checkpoint.kind == "m2s":
        encoder = ConditioningEncoder(ConditioningEncoderSpec(**spec["encoder"]))
        encoder.load_state_dict(checkpoint.tensors("encoder"))
        encoder.eval()
    return TrainedModels(
        kind=checkpoint.kind,
        predictor=predictor,
        encoder=encoder,
        step=checkpoint.step,
        config=checkpoint.metadata["config"],
    )


def save_autoencoder(model: ToyVAE, path: str, losses: Optional[list] = None) -> None:
    spec = {"kind": "toy_vae", "config": model.config.to_dict()}
    arrays = {
        f"autoencoder.{name}": tensor.detach().cpu().numpy()
        for name, tensor in model.state_dict().items()
    }
    metadata = {
        "kind": "toy_vae",
        "spec": spec,
        "spec_hash": spec_hash(spec),
        "losses": list(losses or []),
    }
    write_container(path, Checkpoint(metadata=metadata, arrays=arrays))
    logger.info(f"Saved autoencoder to {path=}.")


def load_autoencoder(path: str, expected: Optional[ToyVAEConfig] = None) -> ToyVAE:
    checkpoint = load_checkpoint(path)
    if checkpoint.kind != "toy_vae":
        raise ArtifactMismatchError(f"{path} holds a {checkpoint.kind!r} artifact, not an autoencoder")
    config = ToyVAEConfig(**checkpoint.metadata["spec"]["config"])
    if expected is not None and expected.spec != config.spec:
        raise ArtifactMismatchError(
            f"Autoencoder in {path} has {config.spec}, expected {expected.spec}"
        )
    model = ToyVAE(config)
    model.load_state_dict(checkpoint.tensors("autoencoder"))
    return model.freeze()


def checkpoint_manifest(path: str) -> str:
    """
    Human-readable dump of a checkpoint's metadata and array table.
    """
    checkpoint = load_checkpoint(path)
    lines = [f"format: RECK v{VERSION}", f"kind: {checkpoint.kind}"]
    for key in sorted(checkpoint.metadata):
        if key in ("kind", "history", "optimizers", "losses"):
            continue
        value = checkpoint.metadata[key]
        if isinstance(value, dict):
            lines.append(f"{key}:")
            lines.extend(f"  {k}: {json.dumps(v, sort_keys=True)}" for k, v in sorted(value.items()))
        else:
            lines.append(f"{key}: {value}")
    if "history" in checkpoint.metadata:
        lines.append(f"history: {len(checkpoint.metadata['history'])} rows")
    total = 0
    lines.append(f"arrays: {len(checkpoint.arrays)}")
    for name in sorted(checkpoint.arrays):
        array = checkpoint.arrays[name]
        total += array.size
        lines.append(f"  {name} {list(array.shape)} {array.dtype.str}")
    lines.append(f"total scalars: {total}")
    return "\n".join(lines)
