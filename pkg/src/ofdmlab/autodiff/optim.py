"""AdamW: Adam with decoupled weight decay."""

from __future__ import annotations

import numpy as np

from .tensor import DiffTensor


class AdamW:
    """Deterministic AdamW over a name -> parameter mapping.

    The update per parameter is
        m = b1*m + (1-b1)*g,  v = b2*v + (1-b2)*g^2
        p -= lr * ( m_hat / (sqrt(v_hat) + eps) + weight_decay * p )
    with bias-corrected moments. A missing gradient counts as zero.
    """

    def __init__(self, params: dict[str, DiffTensor], lr: float = 1e-3,
                 betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8,
                 weight_decay: float = 0.0):
        self.params = dict(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.step_count = 0
        self.m = {name: np.zeros_like(p.values) for name, p in self.params.items()}
        self.v = {name: np.zeros_like(p.values) for name, p in self.params.items()}

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def step(self):
        self.step_count += 1
        bc1 = 1.0 - self.beta1 ** self.step_count
        bc2 = 1.0 - self.beta2 ** self.step_count
        for name, p in self.params.items():
            g = p.grad if p.grad is not None else np.zeros_like(p.values)
            if g.shape != p.values.shape:
                raise ValueError(f"gradient shape mismatch for {name}")
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            # denom = sqrt(v/bc2) + eps, fused into one scratch buffer
            scratch = np.array(v / bc2)  # np.array: 0-d params stay ndarray
            np.sqrt(scratch, out=scratch)
            scratch += self.eps
            np.divide(m, scratch, out=scratch)
            scratch *= self.lr / bc1
            if self.weight_decay:
                p.values *= 1.0 - self.lr * self.weight_decay
            p.values -= scratch

    def grad_norm(self) -> float:
        """Global L2 norm of all current gradients."""
        total = 0.0
        for p in self.params.values():
            if p.grad is not None:
                total += float(np.sum(p.grad ** 2))
        return float(np.sqrt(total))
