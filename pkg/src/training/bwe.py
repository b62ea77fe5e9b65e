import dataclasses
from typing import Dict, Sequence

import torch

from src.networks.discriminator import DiscriminatorSpec, LatentDiscriminator
from src.networks.latent_predictor import LatentPredictor, ModelSpec
from src.objectives import (
    LossReport,
    compose,
    disc_loss,
    feature_match_loss,
    gen_adv_loss,
    rec_loss,
)
from src.training.base import LatentTrainer
from src.training.config import TrainingConfig
from src.training.pairs import TrainingPair
from src.training.schedules import lr_at
from src.utils import set_seed


class BandwidthExtensionTrainer(LatentTrainer):
    """
    Alternating least-squares GAN training in latent space. Each step first updates the
    discriminator on a detached prediction, then the predictor on reconstruction,
    adversarial and feature-matching terms.
    """

    kind = "bwe"

    def __init__(
        self,
        config: TrainingConfig,
        model_spec: ModelSpec,
        pairs: Sequence[TrainingPair],
        discriminator_spec: DiscriminatorSpec = DiscriminatorSpec(),
    ):
        super().__init__(config=config, pairs=pairs)
        if model_spec.conditioned or model_spec.output_streams != 1:
            raise ValueError("Bandwidth extension uses an unconditioned single-stream model")
        self.model_spec = model_spec
        self.discriminator_spec = discriminator_spec
        set_seed(config.seed)
        self.predictor = LatentPredictor(model_spec)
        self.discriminator = LatentDiscriminator(discriminator_spec)
        self.optimizer = torch.optim.AdamW(
            self.predictor.parameters(),
            lr=lr_at(0, config.lr_main, config.warmup_main),
            betas=config.betas,
            eps=config.adam_eps,
            weight_decay=config.weight_decay,
        )
        self.disc_optimizer = torch.optim.AdamW(
            self.discriminator.parameters(),
            lr=lr_at(0, config.lr_disc, config.warmup_disc),
            betas=config.betas,
            eps=config.adam_eps,
            weight_decay=config.weight_decay,
        )
        self.train()

    def modules(self) -> Dict[str, torch.nn.Module]:
        return {"predictor": self.predictor, "discriminator": self.discriminator}

    def optimizers(self) -> Dict[str, torch.optim.Optimizer]:
        return {"main": self.optimizer, "disc": self.disc_optimizer}

    def spec_payload(self) -> Dict:
        return {
            "kind": self.kind,
            "model": self.model_spec.to_dict(),
            "discriminator": self.discriminator_spec.to_dict(),
        }

    @property
    def adversarial(self) -> bool:
        return (
            self.config.use_discriminator
            and self.step >= self.config.adversarial_start_step
        )

    def train_step(self) -> LossReport:
        z_in, z_tgt = self.batch(self.step)
        lr_main = lr_at(self.step + 1, self.config.lr_main, self.config.warmup_main)
        lr_disc = lr_at(self.step + 1, self.config.lr_disc, self.config.warmup_disc)
        self.set_learning_rate(self.optimizer, lr_main)
        self.set_learning_rate(self.disc_optimizer, lr_disc)

        with self.autocast():
            z_hat = self.predictor(z_in)
        row = {"step": self.step + 1, "lr_main": lr_main, "lr_disc": lr_disc}

        if self.adversarial:
            with self.autocast():
                loss_disc = disc_loss(
                    self.discriminator(z_tgt), self.discriminator(z_hat.detach())
                )
            self.check_finite("disc", loss_disc)
            self.disc_optimizer.zero_grad()
            loss_disc.backward()
            self.clip(self.discriminator.parameters())
            self.disc_optimizer.step()
            row["disc"] = float(loss_disc.detach())

            with self.autocast():
                fake = self.discriminator(z_hat)
                with torch.no_grad():
                    real_features = self.discriminator(z_tgt).features
                terms = {
                    "rec": rec_loss(z_hat, z_tgt),
                    "adv": gen_adv_loss(fake),
                    "fm": feature_match_loss(
                        real_features,
                        fake.features,
                        denominator=self.config.fm_denominator,
                    ),
                }
            weights = self.config.weights
        else:
            with self.autocast():
                terms = {"rec": rec_loss(z_hat, z_tgt)}
            weights = dataclasses.replace(self.config.weights, w_adv=0.0, w_fm=0.0)

        report = compose(terms, weights, step=self.step + 1)
        self.optimizer.zero_grad()
        report.objective.backward()
        self.clip(self.predictor.parameters())
        self.optimizer.step()
        self.step += 1
        self.record({**row, **report.terms, "total": report.total})
        return report
