"""Shared body encoder with one skip-connected decoder per garment template."""

from typing import Dict, List, Sequence

import numpy as np

from ..config import INPUT_CHANNELS, TEMPLATES
from ..errors import NetShapeError
from .layers import Activation, BatchNorm2d, Block, Conv2d, ConvTranspose2d, Module

DEPTH = 4


def _down(in_c: int, out_c: int, rng: np.random.Generator) -> Block:
    return Block(Conv2d(in_c, out_c, rng), BatchNorm2d(out_c), Activation("relu"))


def _up(in_c: int, out_c: int, rng: np.random.Generator) -> Block:
    return Block(ConvTranspose2d(in_c, out_c, rng), BatchNorm2d(out_c), Activation("relu"))


class Decoder(Module):
    """
    Three upsampling blocks, each followed by concatenation with the
    matching encoder features, then a transposed convolution to three
    channels through tanh.
    """

    def __init__(self, widths: Sequence[int], out_channels: int, rng: np.random.Generator):
        super().__init__()
        b1, b2, b3, b4 = widths
        self.ups = [_up(b4, b3, rng), _up(2 * b3, b2, rng), _up(2 * b2, b1, rng)]
        self.out = Block(ConvTranspose2d(2 * b1, out_channels, rng), Activation("tanh"))
        self._split: List[int] = []

    def children(self):
        return [(f"up{i}", b) for i, b in enumerate(self.ups)] + [("out", self.out)]

    def forward(self, features: Sequence[np.ndarray]) -> np.ndarray:
        """``features`` are the encoder outputs from shallow to deep."""
        x = features[-1]
        self._split = []
        for block, skip in zip(self.ups, reversed(features[:-1])):
            x = block.forward(x)
            self._split.append(x.shape[1])
            x = np.concatenate([x, skip], axis=1)
        return self.out.forward(x)

    def backward(self, dout: np.ndarray) -> List[np.ndarray]:
        """Gradients for each encoder feature, shallow to deep."""
        grads: List[np.ndarray] = []
        d = self.out.backward(dout)
        for block, width in zip(reversed(self.ups), reversed(self._split)):
            d_up, d_skip = d[:, :width], d[:, width:]
            grads.append(d_skip)
            d = block.backward(d_up)
        grads.append(d)
        return grads


class GeneratorNet(Module):
    """
    Encoder of four stride-2 blocks (conv, batch norm, ReLU) feeding one
    decoder per template. Input is (B, 18, H, W) with H, W multiples of 16;
    each head returns (B, 3, H, W) in [-1, 1].
    """

    def __init__(self, base_channels: int = 64, templates: Sequence[str] = TEMPLATES,
                 in_channels: int = INPUT_CHANNELS, seed: int = 0):
        super().__init__()
        rng = np.random.default_rng(seed)
        self.in_channels = in_channels
        self.base_channels = base_channels
        self.templates = tuple(templates)
        widths = [base_channels * 2 ** i for i in range(DEPTH)]
        chans = [in_channels] + widths
        self.encoder = [_down(chans[i], chans[i + 1], rng) for i in range(DEPTH)]
        self.decoders: Dict[str, Decoder] = {t: Decoder(widths, 3, rng) for t in self.templates}

    def children(self):
        enc = [(f"enc{i}", b) for i, b in enumerate(self.encoder)]
        return enc + [(f"dec_{t}", d) for t, d in self.decoders.items()]

    def forward(self, x: np.ndarray) -> Dict[str, np.ndarray]:
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise NetShapeError(f"generator expects (B, {self.in_channels}, H, W), got {x.shape}")
        if x.shape[2] % 2 ** DEPTH or x.shape[3] % 2 ** DEPTH:
            raise NetShapeError(f"map size {x.shape[2]}x{x.shape[3]} is not a multiple of {2 ** DEPTH}")
        features = []
        h = x
        for block in self.encoder:
            h = block.forward(h)
            features.append(h)
        return {t: d.forward(features) for t, d in self.decoders.items()}

    def backward(self, douts: Dict[str, np.ndarray]) -> np.ndarray:
        """Accumulate gradients from every head; returns the input gradient."""
        feature_grads = None
        for t, d in self.decoders.items():
            grads = d.backward(douts[t])
            feature_grads = grads if feature_grads is None else [a + b for a, b in zip(feature_grads, grads)]
        d = feature_grads[-1]
        for i in range(DEPTH - 1, -1, -1):
            d = self.encoder[i].backward(d)
            if i > 0:
                d = d + feature_grads[i - 1]
        return d

    def predict(self, x: np.ndarray) -> Dict[str, np.ndarray]:
        """Forward pass with running batch-norm statistics."""
        was_training = self.training
        self.eval()
        try:
            return self.forward(x)
        finally:
            self.train(was_training)


def stack_heads(outputs: Dict[str, np.ndarray], templates: Sequence[str] = TEMPLATES) -> np.ndarray:
    """(B, 3 * T, H, W) in template order."""
    return np.concatenate([outputs[t] for t in templates], axis=1)


def split_heads(stacked: np.ndarray, templates: Sequence[str] = TEMPLATES) -> Dict[str, np.ndarray]:
    return {t: stacked[:, 3 * i:3 * i + 3] for i, t in enumerate(templates)}