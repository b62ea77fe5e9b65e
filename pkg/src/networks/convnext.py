from typing import Optional

import torch

GRN_EPS = 1e-6


class GlobalResponseNorm(torch.nn.Module):
    """
    Global response normalisation over the time axis for channel-last inputs of size (B, T, D).
    gamma and beta start at zero so the layer is the identity at initialisation.
    """

    def __init__(self, dim: int):
        super().__init__()
        self.gamma = torch.nn.Parameter(torch.zeros(1, 1, dim))
        self.beta = torch.nn.Parameter(torch.zeros(1, 1, dim))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        gx = torch.linalg.vector_norm(x, ord=2, dim=1, keepdim=True)
        nx = gx / (gx.mean(dim=-1, keepdim=True) + GRN_EPS)
        return self.gamma * (x * nx) + self.beta + x


class AdaptiveLayerNorm(torch.nn.Module):
    """
    Layer norm without affine parameters, modulated by a projection of the condition:
    LN(x) * (1 + gamma) + beta. The projection is zero-initialised.
    """

    def __init__(self, dim: int, condition_dim: int):
        super().__init__()
        self.norm = torch.nn.LayerNorm(dim, elementwise_affine=False)
        self.projection = torch.nn.Linear(condition_dim, 2 * dim)
        torch.nn.init.zeros_(self.projection.weight)
        torch.nn.init.zeros_(self.projection.bias)

    def forward(self, x: torch.Tensor, condition: torch.Tensor) -> torch.Tensor:
        """
        :param x: channel-last input of size (B, T, D)
        :param condition: condition of size (B, H)
        """
        gamma, beta = torch.chunk(self.projection(condition), 2, dim=-1)
        return self.norm(x) * (1.0 + gamma[:, None, :]) + beta[:, None, :]


class ConvNeXtV2Block(torch.nn.Module):
    """
    Residual 1-D ConvNeXt-V2 block acting on inputs of size (B, D, T).

    D is the hidden dimension
    T is the number of frames
    H is the condition dimension
    """

    def __init__(
        self,
        dim: int,
        expansion: int = 2,
        kernel_size: int = 7,
        condition_dim: Optional[int] = None,
    ):
        super().__init__()
        if kernel_size % 2 != 1:
            raise ValueError(f"{kernel_size=} must be odd")
        self.dim = dim
        self.expansion = expansion
        self.kernel_size = kernel_size
        self.condition_dim = condition_dim
        self.dwconv = torch.nn.Conv1d(
            dim, dim, kernel_size, padding=kernel_size // 2, groups=dim
        )
        if condition_dim is None:
            self.norm = torch.nn.LayerNorm(dim)
        else:
            self.norm = AdaptiveLayerNorm(dim, condition_dim)
        self.pwconv1 = torch.nn.Linear(dim, expansion * dim)
        self.act = torch.nn.GELU()
        self.grn = GlobalResponseNorm(expansion * dim)
        self.pwconv2 = torch.nn.Linear(expansion * dim, dim)

    @property
    def conditioned(self) -> bool:
        return self.condition_dim is not None

    def forward(
        self, x: torch.Tensor, condition: Optional[torch.Tensor] = None
    ) -> torch.Tensor:
        if self.conditioned != (condition is not None):
            raise ValueError(
                f"Block with {self.condition_dim=} received condition={condition is not None}"
            )
        residual = x
        x = self.dwconv(x).transpose(1, 2)  # (B, T, D)
        if self.conditioned:
            if condition.shape[-1] != self.condition_dim:
                raise ValueError(
                    f"Condition of size {condition.shape[-1]} given to a block expecting {self.condition_dim}"
                )
            x = self.norm(x, condition)
        else:
            x = self.norm(x)
        x = self.pwconv1(x)
        x = self.act(x)
        x = self.grn(x)
        x = self.pwconv2(x)
        return residual + x.transpose(1, 2)

    def flops_per_frame(self) -> int:
        # 2 per multiply-accumulate, 1 per element for norms, activations and the residual add
        expanded = self.expansion * self.dim
        flops = 2 * self.kernel_size * self.dim
        flops += self.dim
        if self.conditioned:
            flops += 2 * self.dim
        flops += 2 * self.dim * expanded
        flops += 2 * expanded
        flops += 2 * expanded * self.dim
        flops += self.dim
        return flops

    def flops_per_sequence(self) -> int:
        if not self.conditioned:
            return 0
        return 2 * self.condition_dim * 2 * self.dim
