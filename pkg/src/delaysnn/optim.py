"""Adam/AdamW with two parameter groups: weights (incl. batch norm) and delays.

Decoupled weight decay (AdamW) applies to the weight group only. Delays are
clamped to [0, d_max] after every step.
"""

from __future__ import annotations

import numpy as np

from .config import RunConfig
from .model import NetworkModel


def parameter_groups(model: NetworkModel):
    """Yield (name, array, group) for every trainable parameter."""
    for i, layer in enumerate(model.layers):
        yield f"layer{i}.w_ff", layer.w_ff, "weights"
        if layer.bn is not None:
            yield f"layer{i}.bn.gamma", layer.bn.gamma, "weights"
            yield f"layer{i}.bn.beta", layer.bn.beta, "weights"
        yield f"layer{i}.kernel.w", layer.kernel.w, "weights"
        if layer.delays.trainable:
            yield f"layer{i}.delays.d", layer.delays.d, "delays"
    yield "w_out", model.w_out, "weights"
    yield "b_out", model.b_out, "weights"


class AdamOptimizer:
    def __init__(self, model: NetworkModel, config: RunConfig):
        self.model = model
        self.config = config
        self.t = 0
        self.m = {}
        self.v = {}
        for name, arr, _ in parameter_groups(model):
            self.m[name] = np.zeros_like(arr)
            self.v[name] = np.zeros_like(arr)

    def step(self, grads: dict):
        cfg = self.config
        b1, b2 = cfg.adam_betas
        self.t += 1
        bc1 = 1.0 - b1 ** self.t
        bc2 = 1.0 - b2 ** self.t
        for name, p, group in parameter_groups(self.model):
            g = grads[name]
            lr = cfg.lr_delays if group == "delays" else cfg.lr_weights
            if cfg.optimizer == "adamw" and group == "weights":
                p -= lr * cfg.weight_decay * p
            m = self.m[name]
            v = self.v[name]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= lr * (m / bc1) / (np.sqrt(v / bc2) + cfg.adam_eps)
        for layer in self.model.layers:
            if layer.delays.trainable:
                layer.delays.clamp()
