import logging
import math
import os
from abc import ABC, abstractmethod
from contextlib import nullcontext
from typing import Dict, Iterable, List, Optional, Sequence

import pandas as pd
import torch
from tqdm import tqdm

from src.exceptions import EmptyInputError, NonFiniteLossError
from src.objectives import LossReport
from src.training.checkpoints import save_checkpoint
from src.training.config import TrainingConfig
from src.training.pairs import TrainingPair, collate
from src.utils import make_generator

logger = logging.getLogger(__name__)


class LatentTrainer(ABC):
    """
    Shared loop for the latent-space trainers. Batch composition for a step is a pure
    function of (seed, step): positions are read from per-epoch permutations seeded with
    seed + epoch, so a resumed run sees the same batches as an unbroken one.

    B is the batch size
    N is the number of training pairs
    """

    kind: str

    def __init__(self, config: TrainingConfig, pairs: Sequence[TrainingPair]):
        if len(pairs) == 0:
            raise EmptyInputError("Cannot train on an empty set of pairs")
        self.config = config
        self.pairs = list(pairs)
        self.step = 0
        self.generator = make_generator(config.seed)
        self.history: List[Dict[str, float]] = []
        self._permutations: Dict[int, torch.Tensor] = {}

    @abstractmethod
    def modules(self) -> Dict[str, torch.nn.Module]:
        raise NotImplementedError

    @abstractmethod
    def optimizers(self) -> Dict[str, torch.optim.Optimizer]:
        raise NotImplementedError

    @abstractmethod
    def spec_payload(self) -> Dict:
        """
        Architecture description echoed into checkpoints and hashed to detect mismatches.
        """
        raise NotImplementedError

    @abstractmethod
    def train_step(self) -> LossReport:
        raise NotImplementedError

    def _permutation(self, epoch: int) -> torch.Tensor:
        if epoch not in self._permutations:
            self._permutations = {
                epoch: torch.randperm(
                    len(self.pairs), generator=make_generator(self.config.seed + epoch)
                )
            }
        return self._permutations[epoch]

    def batch_indices(self, step: int) -> List[int]:
        indices = []
        for position in range(
            step * self.config.batch_size, (step + 1) * self.config.batch_size
        ):
            epoch, offset = divmod(position, len(self.pairs))
            indices.append(int(self._permutation(epoch)[offset]))
        return indices

    def batch(self, step: int):
        return collate([self.pairs[i] for i in self.batch_indices(step)])

    def autocast(self):
        if self.config.precision == "reduced":
            return torch.autocast(device_type="cpu", dtype=torch.bfloat16)
        return nullcontext()

    @staticmethod
    def set_learning_rate(optimizer: torch.optim.Optimizer, lr: float) -> None:
        for group in optimizer.param_groups:
            group["lr"] = lr

    def clip(self, parameters: Iterable[torch.nn.Parameter]) -> None:
        if self.config.grad_clip_norm is not None:
            torch.nn.utils.clip_grad_norm_(list(parameters), self.config.grad_clip_norm)

    def check_finite(self, term: str, value: torch.Tensor) -> None:
        value = float(value.detach())
        if not math.isfinite(value):
            raise NonFiniteLossError(term=term, value=value, step=self.step)

    def record(self, row: Dict[str, float]) -> None:
        self.history.append(row)
        if self.config.log_every and self.step % self.config.log_every == 0:
            logger.info(
                f"{self.kind} step {self.step}: "
                + ", ".join(f"{k}={v:.5g}" for k, v in row.items() if k != "step")
            )

    def fit(
        self,
        steps: Optional[int] = None,
        checkpoint_dir: Optional[str] = None,
    ) -> pd.DataFrame:
        """
        Runs train_step until the step counter reaches total_steps, or for the given number of steps.

        :param steps: number of steps to run, defaults to the remainder of total_steps
        :param checkpoint_dir: where periodic checkpoints go when checkpoint_every is set
        :return: the loss history
        """
        if steps is None:
            steps = max(self.config.total_steps - self.step, 0)
        if checkpoint_dir is not None and self.config.checkpoint_every:
            os.makedirs(checkpoint_dir, exist_ok=True)
        for _ in tqdm(range(steps), desc=f"{self.kind.upper()} Step"):
            self.train_step()
            if (
                checkpoint_dir is not None
                and self.config.checkpoint_every
                and self.step % self.config.checkpoint_every == 0
            ):
                save_checkpoint(
                    self, os.path.join(checkpoint_dir, f"step-{self.step:08d}.reck")
                )
        return self.history_frame()

    def history_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.history)

    def train(self) -> None:
        for module in self.modules().values():
            module.train()

    def eval(self) -> None:
        for module in self.modules().values():
            module.eval()
