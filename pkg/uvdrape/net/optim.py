"""Adam optimizer over a module's named parameters."""

from typing import Dict

import numpy as np

from .layers import Module


class Adam:
    """Adam with bias correction; moments are kept per parameter name."""

    def __init__(self, module: Module, lr: float = 2e-4, betas=(0.5, 0.999), eps: float = 1e-8):
        if lr <= 0:
            raise ValueError("learning rate must be positive")
        if not (0.0 <= betas[0] < 1.0 and 0.0 <= betas[1] < 1.0):
            raise ValueError(f"betas must lie in [0, 1), got {betas}")
        self.module = module
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        params = module.parameters()
        self.m: Dict[str, np.ndarray] = {k: np.zeros_like(v, dtype=np.float64) for k, v in params.items()}
        self.v: Dict[str, np.ndarray] = {k: np.zeros_like(v, dtype=np.float64) for k, v in params.items()}

    def zero_grad(self) -> None:
        self.module.zero_grad()

    def step(self) -> None:
        """Apply one update from the gradients currently accumulated in the module."""
        self.t += 1
        params = self.module.parameters()
        grads = self.module.gradients()
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for name, p in params.items():
            g = grads[name].astype(np.float64)
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            update = self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
            p -= update.astype(p.dtype)

    def state(self) -> Dict[str, np.ndarray]:
        out = {"t": np.array([self.t], dtype=np.int64)}
        out.update({f"m.{k}": v for k, v in self.m.items()})
        out.update({f"v.{k}": v for k, v in self.v.items()})
        return out

    def load_state(self, state: Dict[str, np.ndarray]) -> None:
        self.t = int(np.asarray(state["t"])[0])
        for k in self.m:
            self.m[k][...] = state[f"m.{k}"]
            self.v[k][...] = state[f"v.{k}"]
