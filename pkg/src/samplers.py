from dataclasses import dataclass
from typing import Optional

import torch

from src.exceptions import DimensionError, NonFiniteError


@dataclass(frozen=True)
class ConditionVector:
    """
    Global conditioning vector c = mu + sigma * eps.
    Tensors are of size (H,) for a single sequence or (B, H) for a batch.
    Tensors are not detached, so gradients flow through the sample during training.
    """

    mu: torch.Tensor
    sigma: torch.Tensor
    sample: torch.Tensor

    def __post_init__(self):
        if not (self.mu.shape == self.sigma.shape == self.sample.shape):
            raise DimensionError(
                f"mu, sigma and sample shapes differ: {tuple(self.mu.shape)}, "
                f"{tuple(self.sigma.shape)}, {tuple(self.sample.shape)}"
            )
        if self.sample.ndim not in (1, 2) or self.sample.shape[-1] == 0:
            raise DimensionError(
                f"Condition must be of size (H,) or (B, H), got {tuple(self.sample.shape)}"
            )
        if not bool((self.sigma > 0).all()):
            raise NonFiniteError("sigma must be strictly positive")
        if not bool(torch.isfinite(self.sample).all()):
            raise NonFiniteError("Condition sample contains non-finite values")

    @property
    def dimension(self) -> int:
        return self.sample.shape[-1]

    @property
    def batched(self) -> bool:
        return self.sample.ndim == 2

    def detach(self) -> "ConditionVector":
        return ConditionVector(
            mu=self.mu.detach(), sigma=self.sigma.detach(), sample=self.sample.detach()
        )

    def as_batch(self) -> "ConditionVector":
        if self.batched:
            return self
        return ConditionVector(
            mu=self.mu[None], sigma=self.sigma[None], sample=self.sample[None]
        )

    def item(self, i: int) -> "ConditionVector":
        batch = self.as_batch()
        return ConditionVector(
            mu=batch.mu[i], sigma=batch.sigma[i], sample=batch.sample[i]
        )

    @staticmethod
    def deterministic(c: torch.Tensor) -> "ConditionVector":
        """
        Wraps a fixed vector, for instance one read from a file.
        """
        c = c.detach().clone()
        return ConditionVector(mu=c, sigma=torch.ones_like(c), sample=c)


def reparameterize(
    mu: torch.Tensor,
    sigma: torch.Tensor,
    generator: Optional[torch.Generator] = None,
) -> ConditionVector:
    """
    Draws c = mu + sigma * eps with eps ~ N(0, I).

    :param mu: means of size (H,) or (B, H)
    :param sigma: positive standard deviations of the same size
    :param generator: generator for eps
    :return: the condition with its sample
    """
    eps = torch.randn(mu.shape, generator=generator, dtype=mu.dtype).to(mu.device)
    return ConditionVector(mu=mu, sigma=sigma, sample=mu + sigma * eps)


def sample_prior(
    dimension: int,
    generator: Optional[torch.Generator] = None,
    batch_size: Optional[int] = None,
    dtype: torch.dtype = torch.float32,
) -> ConditionVector:
    """
    Draws c ~ N(0, I_H) and records mu = 0, sigma = 1.

    :param dimension: condition dimension H
    :param generator: generator for the draw
    :param batch_size: number of draws, a single (H,) vector when None
    :param dtype: tensor dtype
    :return: the prior condition
    """
    if dimension < 1:
        raise ValueError(f"{dimension=} must be positive")
    shape = (dimension,) if batch_size is None else (batch_size, dimension)
    return reparameterize(
        mu=torch.zeros(shape, dtype=dtype),
        sigma=torch.ones(shape, dtype=dtype),
        generator=generator,
    )


def interpolate_conditions(
    c_gt: ConditionVector, c_0: ConditionVector, lam: float
) -> ConditionVector:
    """
    Linear blend lam * c_gt + (1 - lam) * c_0 of two condition samples.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"{lam=} must lie in [0, 1]")
    if c_gt.sample.shape != c_0.sample.shape:
        raise DimensionError(
            f"Conditions differ in shape: {tuple(c_gt.sample.shape)} and {tuple(c_0.sample.shape)}"
        )
    return ConditionVector.deterministic(lam * c_gt.sample + (1.0 - lam) * c_0.sample)
