"""PatchGAN discriminator producing a grid of patch logits."""

from typing import Optional

import numpy as np

from ..config import INPUT_CHANNELS, TEMPLATES
from ..errors import NetShapeError
from .layers import Activation, BatchNorm2d, Block, Conv2d, Module


class DiscriminatorNet(Module):
    """
    Four stride-2 convolutions with LeakyReLU (batch norm on all but the
    first) and a 3x3 convolution to one logit per patch. No sigmoid.

    When ``conditional`` the body input maps are concatenated with the
    offset maps being judged.
    """

    def __init__(self, base_channels: int = 64, target_channels: int = 3 * len(TEMPLATES),
                 condition_channels: int = INPUT_CHANNELS, conditional: bool = True, seed: int = 1):
        super().__init__()
        rng = np.random.default_rng(seed)
        self.conditional = conditional
        self.base_channels = base_channels
        self.target_channels = target_channels
        self.condition_channels = condition_channels if conditional else 0
        b = base_channels
        in_c = self.target_channels + self.condition_channels
        self.body = Block(
            Conv2d(in_c, b, rng), Activation("leaky_relu"),
            Conv2d(b, 2 * b, rng), BatchNorm2d(2 * b), Activation("leaky_relu"),
            Conv2d(2 * b, 4 * b, rng), BatchNorm2d(4 * b), Activation("leaky_relu"),
            Conv2d(4 * b, 8 * b, rng), BatchNorm2d(8 * b), Activation("leaky_relu"),
            Conv2d(8 * b, 1, rng, kernel=3, stride=1, pad=1),
        )

    def children(self):
        return [("body", self.body)]

    def _join(self, condition: Optional[np.ndarray], target: np.ndarray) -> np.ndarray:
        if target.shape[1] != self.target_channels:
            raise NetShapeError(f"discriminator expects {self.target_channels} target channels, got {target.shape[1]}")
        if not self.conditional:
            return target
        if condition is None or condition.shape[1] != self.condition_channels:
            raise NetShapeError("conditional discriminator needs the body input maps")
        return np.concatenate([condition.astype(target.dtype), target], axis=1)

    def forward(self, condition: Optional[np.ndarray], target: np.ndarray) -> np.ndarray:
        """(B, 1, H/16, W/16) logits."""
        return self.body.forward(self._join(condition, target))

    def backward(self, dout: np.ndarray) -> np.ndarray:
        """Gradient with respect to the target maps."""
        d = self.body.backward(dout)
        return d[:, self.condition_channels:]
