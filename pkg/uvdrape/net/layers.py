"""
Numpy layers with hand-written backward passes.

Tensors are (batch, channels, height, width). Convolutions are computed
tap by tap with ``np.tensordot``; each tap multiplies a strided view of
the padded input by one (out, in) weight slice.
"""

from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from ..errors import NetShapeError

BN_MOMENTUM = 0.1
BN_EPS = 1e-5
LEAKY_SLOPE = 0.2
INIT_STD = 0.02


def _check4(x: np.ndarray, channels: int, what: str) -> None:
    if x.ndim != 4:
        raise NetShapeError(f"{what}: expected a 4D tensor, got shape {x.shape}")
    if x.shape[1] != channels:
        raise NetShapeError(f"{what}: expected {channels} channels, got {x.shape[1]}")


def _tap(index: int, stride: int, count: int) -> slice:
    return slice(index, index + stride * (count - 1) + 1, stride)


def conv_output_size(size: int, kernel: int, stride: int, pad: int) -> int:
    return (size + 2 * pad - kernel) // stride + 1


def tconv_output_size(size: int, kernel: int, stride: int, pad: int) -> int:
    return (size - 1) * stride - 2 * pad + kernel


def conv_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int, pad: int) -> np.ndarray:
    """Cross-correlation; ``w`` is (out, in, k, k)."""
    out_c, in_c, k, _ = w.shape
    _check4(x, in_c, "conv")
    n, _, h, wd = x.shape
    ho = conv_output_size(h, k, stride, pad)
    wo = conv_output_size(wd, k, stride, pad)
    if ho < 1 or wo < 1:
        raise NetShapeError(f"conv: {h}x{wd} input too small for kernel {k}")
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    acc = np.zeros((n, ho, wo, out_c), dtype=x.dtype)
    for i in range(k):
        for j in range(k):
            patch = xp[:, :, _tap(i, stride, ho), _tap(j, stride, wo)]
            acc += np.tensordot(patch, w[:, :, i, j], axes=([1], [1]))
    return acc.transpose(0, 3, 1, 2) + b[None, :, None, None]


def conv_backward(dout: np.ndarray, x: np.ndarray, w: np.ndarray, stride: int,
                  pad: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients (dx, dw, db) of ``conv_forward``."""
    _, _, k, _ = w.shape
    _, _, h, wd = x.shape
    ho, wo = dout.shape[2], dout.shape[3]
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    dxp = np.zeros_like(xp)
    dw = np.zeros_like(w)
    for i in range(k):
        for j in range(k):
            rows, cols = _tap(i, stride, ho), _tap(j, stride, wo)
            patch = xp[:, :, rows, cols]
            dw[:, :, i, j] = np.tensordot(dout, patch, axes=([0, 2, 3], [0, 2, 3]))
            dxp[:, :, rows, cols] += np.tensordot(dout, w[:, :, i, j], axes=([1], [0])).transpose(0, 3, 1, 2)
    db = dout.sum(axis=(0, 2, 3))
    return dxp[:, :, pad:pad + h, pad:pad + wd], dw, db


def tconv_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int, pad: int) -> np.ndarray:
    """Transposed convolution; ``w`` is (in, out, k, k)."""
    in_c, out_c, k, _ = w.shape
    _check4(x, in_c, "transposed conv")
    n, _, h, wd = x.shape
    full_h = (h - 1) * stride + k
    full_w = (wd - 1) * stride + k
    buf = np.zeros((n, out_c, full_h, full_w), dtype=x.dtype)
    for i in range(k):
        for j in range(k):
            contrib = np.tensordot(x, w[:, :, i, j], axes=([1], [0]))
            buf[:, :, _tap(i, stride, h), _tap(j, stride, wd)] += contrib.transpose(0, 3, 1, 2)
    ho = tconv_output_size(h, k, stride, pad)
    wo = tconv_output_size(wd, k, stride, pad)
    return buf[:, :, pad:pad + ho, pad:pad + wo] + b[None, :, None, None]


def tconv_backward(dout: np.ndarray, x: np.ndarray, w: np.ndarray, stride: int,
                   pad: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients (dx, dw, db) of ``tconv_forward``."""
    _, _, k, _ = w.shape
    n, _, h, wd = x.shape
    full_h = (h - 1) * stride + k
    full_w = (wd - 1) * stride + k
    dbuf = np.zeros((n, dout.shape[1], full_h, full_w), dtype=dout.dtype)
    dbuf[:, :, pad:pad + dout.shape[2], pad:pad + dout.shape[3]] = dout
    dx = np.zeros_like(x)
    dw = np.zeros_like(w)
    for i in range(k):
        for j in range(k):
            patch = dbuf[:, :, _tap(i, stride, h), _tap(j, stride, wd)]
            dx += np.tensordot(patch, w[:, :, i, j], axes=([1], [1])).transpose(0, 3, 1, 2)
            dw[:, :, i, j] = np.tensordot(x, patch, axes=([0, 2, 3], [0, 2, 3]))
    db = dout.sum(axis=(0, 2, 3))
    return dx, dw, db


def batchnorm_forward(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray, mean: np.ndarray,
                      var: np.ndarray, training: bool):
    """
    Normalize per channel. In training the batch statistics are used and
    returned; otherwise ``mean``/``var`` are.

    Returns:
        (y, cache, batch_mean, batch_var)
    """
    if training:
        mu = x.mean(axis=(0, 2, 3))
        sigma2 = x.var(axis=(0, 2, 3))
    else:
        mu, sigma2 = mean, var
    inv_std = 1.0 / np.sqrt(sigma2 + BN_EPS)
    xhat = (x - mu[None, :, None, None]) * inv_std[None, :, None, None]
    y = gamma[None, :, None, None] * xhat + beta[None, :, None, None]
    return y, (xhat, inv_std, gamma), mu, sigma2


def batchnorm_backward(dy: np.ndarray, cache, training: bool = True):
    """Gradients (dx, dgamma, dbeta)."""
    xhat, inv_std, gamma = cache
    dgamma = np.sum(dy * xhat, axis=(0, 2, 3))
    dbeta = dy.sum(axis=(0, 2, 3))
    dxhat = dy * gamma[None, :, None, None]
    if not training:
        return dxhat * inv_std[None, :, None, None], dgamma, dbeta
    m = dy.shape[0] * dy.shape[2] * dy.shape[3]
    sum_dxhat = dxhat.sum(axis=(0, 2, 3))[None, :, None, None]
    sum_dxhat_xhat = np.sum(dxhat * xhat, axis=(0, 2, 3))[None, :, None, None]
    dx = inv_std[None, :, None, None] / m * (m * dxhat - sum_dxhat - xhat * sum_dxhat_xhat)
    return dx, dgamma, dbeta


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def relu_backward(dout: np.ndarray, x: np.ndarray) -> np.ndarray:
    return dout * (x > 0)


def leaky_relu(x: np.ndarray, slope: float = LEAKY_SLOPE) -> np.ndarray:
    return np.where(x > 0, x, slope * x)


def leaky_relu_backward(dout: np.ndarray, x: np.ndarray, slope: float = LEAKY_SLOPE) -> np.ndarray:
    return dout * np.where(x > 0, 1.0, slope).astype(dout.dtype)


def tanh(x: np.ndarray) -> np.ndarray:
    return np.tanh(x)


def tanh_backward(dout: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``y`` is the forward output."""
    return dout * (1.0 - y * y)


class Module:
    """
    A layer or container with named parameters, their gradients and
    non-trainable buffers. ``training`` switches batch-norm statistics.
    """

    def __init__(self):
        self.params: Dict[str, np.ndarray] = {}
        self.grads: Dict[str, np.ndarray] = {}
        self.buffers: Dict[str, np.ndarray] = {}
        self.training = True

    def children(self) -> List[Tuple[str, "Module"]]:
        return []

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, np.ndarray]]:
        for name, p in self.params.items():
            yield prefix + name, p
        for child_name, child in self.children():
            yield from child.named_parameters(f"{prefix}{child_name}.")

    def named_gradients(self, prefix: str = "") -> Iterator[Tuple[str, np.ndarray]]:
        for name, g in self.grads.items():
            yield prefix + name, g
        for child_name, child in self.children():
            yield from child.named_gradients(f"{prefix}{child_name}.")

    def named_buffers(self, prefix: str = "") -> Iterator[Tuple[str, np.ndarray]]:
        for name, b in self.buffers.items():
            yield prefix + name, b
        for child_name, child in self.children():
            yield from child.named_buffers(f"{prefix}{child_name}.")

    def parameters(self) -> Dict[str, np.ndarray]:
        return dict(self.named_parameters())

    def gradients(self) -> Dict[str, np.ndarray]:
        return dict(self.named_gradients())

    def state(self) -> Dict[str, np.ndarray]:
        """Parameters and buffers by dotted name."""
        out = dict(self.named_parameters())
        out.update(self.named_buffers())
        return out

    def load_state(self, state: Dict[str, np.ndarray]) -> None:
        """Copy arrays into existing parameters and buffers in place."""
        own = self.state()
        missing = sorted(set(own) - set(state))
        if missing:
            raise NetShapeError(f"state is missing {', '.join(missing[:3])}")
        for name, target in own.items():
            value = np.asarray(state[name])
            if value.shape != target.shape:
                raise NetShapeError(f"{name}: shape {value.shape}, expected {target.shape}")
            target[...] = value

    def zero_grad(self) -> None:
        for g in self.gradients().values():
            g[...] = 0

    def train(self, mode: bool = True) -> "Module":
        self.training = mode
        for _, child in self.children():
            child.train(mode)
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def hold_stats(self, hold: bool = True) -> "Module":
        """Keep batch-norm running statistics fixed; batches are still normalized by their own statistics."""
        for _, child in self.children():
            child.hold_stats(hold)
        return self

    def astype(self, dtype) -> "Module":
        """Cast parameters, gradients and buffers."""
        for table in (self.params, self.grads, self.buffers):
            for name in table:
                table[name] = table[name].astype(dtype)
        for _, child in self.children():
            child.astype(dtype)
        return self


class Conv2d(Module):
    def __init__(self, in_channels: int, out_channels: int, rng: np.random.Generator,
                 kernel: int = 4, stride: int = 2, pad: int = 1):
        super().__init__()
        self.stride = stride
        self.pad = pad
        self.params["weight"] = rng.normal(0.0, INIT_STD, (out_channels, in_channels, kernel, kernel)).astype(np.float32)
        self.params["bias"] = np.zeros(out_channels, dtype=np.float32)
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}
        self._x: Optional[np.ndarray] = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        return conv_forward(x, self.params["weight"], self.params["bias"], self.stride, self.pad)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        dx, dw, db = conv_backward(dout, self._x, self.params["weight"], self.stride, self.pad)
        self.grads["weight"] += dw
        self.grads["bias"] += db
        return dx


class ConvTranspose2d(Module):
    def __init__(self, in_channels: int, out_channels: int, rng: np.random.Generator,
                 kernel: int = 4, stride: int = 2, pad: int = 1):
        super().__init__()
        self.stride = stride
        self.pad = pad
        self.params["weight"] = rng.normal(0.0, INIT_STD, (in_channels, out_channels, kernel, kernel)).astype(np.float32)
        self.params["bias"] = np.zeros(out_channels, dtype=np.float32)
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}
        self._x: Optional[np.ndarray] = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        return tconv_forward(x, self.params["weight"], self.params["bias"], self.stride, self.pad)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        dx, dw, db = tconv_backward(dout, self._x, self.params["weight"], self.stride, self.pad)
        self.grads["weight"] += dw
        self.grads["bias"] += db
        return dx


class BatchNorm2d(Module):
    """Batch norm with running statistics; ``freeze_stats`` keeps them fixed in training."""

    def __init__(self, channels: int, momentum: float = BN_MOMENTUM):
        super().__init__()
        self.momentum = momentum
        self.freeze_stats = False
        self.params["gamma"] = np.ones(channels, dtype=np.float32)
        self.params["beta"] = np.zeros(channels, dtype=np.float32)
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}
        self.buffers["running_mean"] = np.zeros(channels, dtype=np.float32)
        self.buffers["running_var"] = np.ones(channels, dtype=np.float32)
        self._cache = None

    def hold_stats(self, hold: bool = True) -> "Module":
        self.freeze_stats = hold
        return self

    def forward(self, x: np.ndarray) -> np.ndarray:
        y, self._cache, mu, var = batchnorm_forward(
            x, self.params["gamma"], self.params["beta"],
            self.buffers["running_mean"], self.buffers["running_var"], self.training,
        )
        if self.training and not self.freeze_stats:
            m = x.shape[0] * x.shape[2] * x.shape[3]
            unbiased = var * m / max(m - 1, 1)
            rm, rv = self.buffers["running_mean"], self.buffers["running_var"]
            rm[...] = (1.0 - self.momentum) * rm + self.momentum * mu
            rv[...] = (1.0 - self.momentum) * rv + self.momentum * unbiased
        return y

    def backward(self, dout: np.ndarray) -> np.ndarray:
        dx, dgamma, dbeta = batchnorm_backward(dout, self._cache, self.training)
        self.grads["gamma"] += dgamma
        self.grads["beta"] += dbeta
        return dx


class Activation(Module):
    """ReLU, LeakyReLU(0.2) or tanh."""

    KINDS = ("relu", "leaky_relu", "tanh")

    def __init__(self, kind: str):
        super().__init__()
        if kind not in self.KINDS:
            raise ValueError(f"unknown activation '{kind}'")
        self.kind = kind
        self._saved: Optional[np.ndarray] = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "relu":
            self._saved = x
            return relu(x)
        if self.kind == "leaky_relu":
            self._saved = x
            return leaky_relu(x)
        y = tanh(x)
        self._saved = y
        return y

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self.kind == "relu":
            return relu_backward(dout, self._saved)
        if self.kind == "leaky_relu":
            return leaky_relu_backward(dout, self._saved)
        return tanh_backward(dout, self._saved)


class Block(Module):
    """A chain of layers run in order."""

    def __init__(self, *layers: Module):
        super().__init__()
        self.layers = list(layers)

    def children(self) -> List[Tuple[str, Module]]:
        return [(str(i), layer) for i, layer in enumerate(self.layers)]

    def forward(self, x: np.ndarray) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, dout: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            dout = layer.backward(dout)
        return dout
