import itertools
from typing import Dict, Sequence

import torch

from src.networks.condition_encoder import ConditioningEncoder, ConditioningEncoderSpec
from src.networks.latent_predictor import LatentPredictor, ModelSpec
from src.objectives import LossReport, compose, kl_loss, rec_loss
from src.training.base import LatentTrainer
from src.training.config import TrainingConfig
from src.training.pairs import TrainingPair
from src.training.schedules import lr_at
from src.utils import set_seed


class MonoToStereoTrainer(LatentTrainer):
    """
    Joint training of the conditioned predictor and the conditioning encoder on
    L1 reconstruction of the stacked stereo latent plus a KL term on the condition posterior.
    """

    kind = "m2s"

    def __init__(
        self,
        config: TrainingConfig,
        model_spec: ModelSpec,
        pairs: Sequence[TrainingPair],
        encoder_spec: ConditioningEncoderSpec,
    ):
        super().__init__(config=config, pairs=pairs)
        if not model_spec.conditioned or model_spec.output_streams != 2:
            raise ValueError("Mono-to-stereo uses a conditioned two-stream model")
        if encoder_spec.output_dim != model_spec.condition_dim:
            raise ValueError(
                f"Encoder emits {encoder_spec.output_dim} dimensions, model expects {model_spec.condition_dim}"
            )
        if encoder_spec.input_channels != 2 * model_spec.latent_channels_out:
            raise ValueError(
                f"Encoder takes {encoder_spec.input_channels} channels, stacked targets have "
                f"{2 * model_spec.latent_channels_out}"
            )
        self.model_spec = model_spec
        self.encoder_spec = encoder_spec
        set_seed(config.seed)
        self.predictor = LatentPredictor(model_spec)
        self.encoder = ConditioningEncoder(encoder_spec)
        self.optimizer = torch.optim.AdamW(
            itertools.chain(self.predictor.parameters(), self.encoder.parameters()),
            lr=lr_at(0, config.lr_main, config.warmup_main),
            betas=config.betas,
            eps=config.adam_eps,
            weight_decay=config.weight_decay,
        )
        self.train()

    def modules(self) -> Dict[str, torch.nn.Module]:
        return {"predictor": self.predictor, "encoder": self.encoder}

    def optimizers(self) -> Dict[str, torch.optim.Optimizer]:
        return {"main": self.optimizer}

    def spec_payload(self) -> Dict:
        return {
            "kind": self.kind,
            "model": self.model_spec.to_dict(),
            "encoder": self.encoder_spec.to_dict(),
        }

    def train_step(self) -> LossReport:
        z_in, z_tgt = self.batch(self.step)
        lr_main = lr_at(self.step + 1, self.config.lr_main, self.config.warmup_main)
        self.set_learning_rate(self.optimizer, lr_main)

        with self.autocast():
            condition = self.encoder.condition(z_tgt, generator=self.generator)
            z_hat = self.predictor(z_in, condition.sample)
            terms = {"rec": rec_loss(z_hat, z_tgt), "kl": kl_loss(condition)}
        report = compose(terms, self.config.weights, step=self.step + 1)
        self.optimizer.zero_grad()
        report.objective.backward()
        self.clip(itertools.chain(self.predictor.parameters(), self.encoder.parameters()))
        self.optimizer.step()
        self.step += 1
        self.record(
            {
                "step": self.step,
                "lr_main": lr_main,
                **report.terms,
                "total": report.total,
            }
        )
        return report
