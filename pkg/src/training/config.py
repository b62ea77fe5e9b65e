import dataclasses
import hashlib
import json
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Literal, Mapping, Optional, Tuple

from src.exceptions import ConfigError
from src.objectives import LossWeights

TASKS = ("bwe", "m2s")
PRECISIONS = ("fp32", "reduced")
FM_DENOMINATORS = ("generated", "real")


@dataclass(frozen=True)
class TrainingConfig:
    """
    Training recipe. Defaults are the full-scale recipe, TrainingConfig.desk gives a laptop-sized run.
    """

    task: Literal["bwe", "m2s"] = "bwe"
    batch_size: int = 256
    chunk_seconds: float = 1.4
    total_steps: int = 250_000
    lr_main: float = 5e-4
    lr_disc: float = 1e-4
    warmup_main: int = 1_000
    warmup_disc: int = 20_000
    weight_decay: float = 1e-4
    betas: Tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-8
    seed: int = 0
    precision: Literal["fp32", "reduced"] = "fp32"
    weights: LossWeights = field(default_factory=LossWeights.bwe)
    adversarial_start_step: int = 0
    grad_clip_norm: Optional[float] = None
    fm_denominator: Literal["generated", "real"] = "generated"
    use_discriminator: bool = True
    log_every: int = 100
    checkpoint_every: int = 0

    def __post_init__(self):
        object.__setattr__(self, "betas", tuple(self.betas))
        if self.task not in TASKS:
            raise ConfigError("task", f"must be one of {TASKS}, got {self.task!r}")
        if self.precision not in PRECISIONS:
            raise ConfigError(
                "precision", f"must be one of {PRECISIONS}, got {self.precision!r}"
            )
        if self.fm_denominator not in FM_DENOMINATORS:
            raise ConfigError(
                "fm_denominator",
                f"must be one of {FM_DENOMINATORS}, got {self.fm_denominator!r}",
            )
        if self.batch_size < 1:
            raise ConfigError("batch_size", "must be at least 1")
        if self.total_steps < 1:
            raise ConfigError("total_steps", "must be at least 1")
        if self.chunk_seconds <= 0:
            raise ConfigError("chunk_seconds", "must be positive")
        for name in ("warmup_main", "warmup_disc"):
            warmup = getattr(self, name)
            if not 0 <= warmup <= self.total_steps:
                raise ConfigError(name, f"{warmup} must lie in [0, total_steps={self.total_steps}]")
        for name in ("lr_main", "lr_disc", "weight_decay", "adam_eps"):
            if getattr(self, name) < 0:
                raise ConfigError(name, "must be non-negative")
        if len(self.betas) != 2 or not all(0 <= beta < 1 for beta in self.betas):
            raise ConfigError("betas", f"must be two values in [0, 1), got {self.betas}")
        if self.grad_clip_norm is not None and self.grad_clip_norm <= 0:
            raise ConfigError("grad_clip_norm", "must be positive when set")
        for name in ("adversarial_start_step", "log_every", "checkpoint_every"):
            if getattr(self, name) < 0:
                raise ConfigError(name, "must be non-negative")

    @staticmethod
    def paper(task: Literal["bwe", "m2s"]) -> "TrainingConfig":
        if task == "bwe":
            return TrainingConfig(task="bwe", chunk_seconds=1.4, weights=LossWeights.bwe())
        return TrainingConfig(
            task="m2s", chunk_seconds=4.0, weights=LossWeights.m2s(), use_discriminator=False
        )

    @staticmethod
    def desk(task: Literal["bwe", "m2s"], seed: int = 0) -> "TrainingConfig":
        return dataclasses.replace(
            TrainingConfig.paper(task),
            batch_size=8,
            chunk_seconds=1.4 if task == "bwe" else 2.0,
            total_steps=300,
            lr_main=2e-3,
            lr_disc=1e-3,
            warmup_main=20,
            warmup_disc=50,
            seed=seed,
            log_every=50,
        )

    def to_dict(self) -> Dict[str, Any]:
        config = asdict(self)
        config["betas"] = list(self.betas)
        return config

    @staticmethod
    def from_dict(config: Mapping[str, Any]) -> "TrainingConfig":
        known = {f.name for f in dataclasses.fields(TrainingConfig)}
        for key in config:
            if key not in known:
                raise ConfigError(key, "unknown training config key")
        config = dict(config)
        if isinstance(config.get("weights"), Mapping):
            known_weights = {f.name for f in dataclasses.fields(LossWeights)}
            for key in config["weights"]:
                if key not in known_weights:
                    raise ConfigError(f"weights.{key}", "unknown loss weight")
            config["weights"] = LossWeights(**config["weights"])
        return TrainingConfig(**config)

    def hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        ).hexdigest()
