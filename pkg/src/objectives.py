import math
from dataclasses import asdict, dataclass, field
from typing import Dict, Literal, Mapping, Optional, Sequence

import torch

from src.exceptions import ConfigError, DimensionError, NonFiniteError, NonFiniteLossError
from src.networks.discriminator import DiscriminatorOutput
from src.samplers import ConditionVector

FEATURE_MATCH_FLOOR = 1e-8
TERM_ORDER = ("rec", "adv", "fm", "kl")


@dataclass(frozen=True)
class LossWeights:
    w_rec: float = 10.0
    w_adv: float = 0.5
    w_fm: float = 1.0
    w_kl: float = 5e-4

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value < 0 or not math.isfinite(value):
                raise ValueError(f"{name}={value} must be finite and non-negative")

    def weight(self, term: str) -> float:
        return getattr(self, f"w_{term}")

    @staticmethod
    def bwe() -> "LossWeights":
        return LossWeights(w_rec=10.0, w_adv=0.5, w_fm=1.0, w_kl=0.0)

    @staticmethod
    def m2s() -> "LossWeights":
        return LossWeights(w_rec=10.0, w_adv=0.0, w_fm=0.0, w_kl=5e-4)

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass
class LossReport:
    """
    Term values, their weights and the weighted total.
    objective is the differentiable total used for the backward pass.
    """

    terms: Dict[str, float]
    weights: Dict[str, float]
    total: float
    objective: Optional[torch.Tensor] = field(default=None, repr=False)

    def to_dict(self) -> Dict[str, float]:
        return {**self.terms, "total": self.total}


def _check_finite(x: torch.Tensor, name: str) -> None:
    if not bool(torch.isfinite(x).all()):
        raise NonFiniteError(f"{name} contains non-finite values")


def rec_loss(z_hat: torch.Tensor, z_tgt: torch.Tensor) -> torch.Tensor:
    if z_hat.shape != z_tgt.shape:
        raise DimensionError(
            f"Predicted latent {tuple(z_hat.shape)} and target {tuple(z_tgt.shape)} differ"
        )
    return (z_tgt - z_hat).abs().mean()


def gen_adv_loss(disc_out_on_fake: DiscriminatorOutput) -> torch.Tensor:
    _check_finite(disc_out_on_fake.score_map, "score map")
    return ((1.0 - disc_out_on_fake.score_map) ** 2).mean()


def disc_loss(
    disc_out_real: DiscriminatorOutput, disc_out_fake: DiscriminatorOutput
) -> torch.Tensor:
    _check_finite(disc_out_real.score_map, "real score map")
    _check_finite(disc_out_fake.score_map, "fake score map")
    return ((1.0 - disc_out_real.score_map) ** 2).mean() + (
        disc_out_fake.score_map**2
    ).mean()


def feature_match_loss(
    features_real: Sequence[torch.Tensor],
    features_fake: Sequence[torch.Tensor],
    denominator: Literal["generated", "real"] = "generated",
) -> torch.Tensor:
    """
    Relative L1 feature distance, summed over layers and averaged over the batch.

    :param features_real: per-layer features on the target, each of size (B, ...)
    :param features_fake: per-layer features on the prediction, same sizes
    :param denominator: which path normalises each layer's L1 distance
    :return: scalar loss
    """
    if len(features_real) != len(features_fake):
        raise DimensionError(
            f"Feature lists differ in length: {len(features_real)} and {len(features_fake)}"
        )
    if len(features_real) == 0:
        raise DimensionError("Feature lists are empty")
    if denominator not in ("generated", "real"):
        raise ValueError(f"Unknown feature-matching {denominator=}")
    total = None
    for i, (real, fake) in enumerate(zip(features_real, features_fake)):
        if real.shape != fake.shape:
            raise DimensionError(
                f"Layer {i} features differ: {tuple(real.shape)} and {tuple(fake.shape)}"
            )
        normaliser = fake if denominator == "generated" else real
        ratio = (real - fake).abs().flatten(1).sum(dim=1) / (
            normaliser.abs().flatten(1).sum(dim=1) + FEATURE_MATCH_FLOOR
        )
        total = ratio if total is None else total + ratio
    return total.mean()


def gaussian_kl(mu: torch.Tensor, log_sigma: torch.Tensor) -> torch.Tensor:
    """
    KL(N(mu, sigma^2) || N(0, I)) summed over every non-batch dimension and averaged over the batch.

    :param mu: means of size (B, ...)
    :param log_sigma: log standard deviations of the same size
    :return: scalar divergence
    """
    kl = 0.5 * (mu**2 + torch.exp(2.0 * log_sigma) - 1.0 - 2.0 * log_sigma)
    return kl.flatten(1).sum(dim=1).mean()


def kl_loss(cond: ConditionVector) -> torch.Tensor:
    batch = cond.as_batch()
    if not bool((batch.sigma > 0).all()):
        raise NonFiniteError("sigma must be strictly positive")
    return gaussian_kl(batch.mu, torch.log(batch.sigma))


def compose(
    report_terms: Mapping[str, torch.Tensor],
    weights: LossWeights,
    step: Optional[int] = None,
) -> LossReport:
    """
    Weighted sum of loss terms in the order rec, adv, fm, kl.
    Terms with zero weight are left out of the differentiable objective.
    """
    unknown = set(report_terms) - set(TERM_ORDER)
    if unknown:
        raise ConfigError(sorted(unknown)[0], f"unknown loss terms {sorted(unknown)}")
    objective = None
    terms, used_weights = {}, {}
    for name in TERM_ORDER:
        weight = weights.weight(name)
        if name not in report_terms:
            if weight > 0:
                raise ConfigError(
                    f"w_{name}", f"loss term {name!r} is missing but weighted {weight}"
                )
            continue
        term = report_terms[name]
        value = float(term.detach())
        if not math.isfinite(value):
            raise NonFiniteLossError(term=name, value=value, step=step)
        terms[name] = value
        used_weights[name] = weight
        if weight == 0:
            continue
        weighted = weight * term
        objective = weighted if objective is None else objective + weighted
    if objective is None:
        objective = torch.zeros(())
    return LossReport(
        terms=terms,
        weights=used_weights,
        total=float(objective.detach()),
        objective=objective,
    )

