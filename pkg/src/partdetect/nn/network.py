"""Sequential network container: chains layer forward/backward passes."""

import numpy as np

from .layers import Dropout
from .loss import softmax, softmax_cross_entropy_batch


class Network:
    """An ordered stack of layers ending in a 2-logit head."""

    def __init__(self, layers):
        self.layers = list(layers)

    def forward(self, x, train=False, rng=None):
        for layer in self.layers:
            x = layer.forward(x, train=train, rng=rng)
        return x

    def backward(self, dlogits):
        """Propagate the loss gradient; fills each layer's ``grads``."""
        d = dlogits
        for layer in reversed(self.layers):
            d = layer.backward(d)
        return d

    def predict_proba(self, x):
        """Softmax probabilities in inference mode (dropout off)."""
        return softmax(self.forward(x, train=False))

    def train_step(self, x, targets, rng):
        """One forward/backward pass in train mode; returns the mean loss.

        Gradients are left in the layers for an optimizer to consume.
        """
        logits = self.forward(x, train=True, rng=rng)
        _, loss, dlogits = softmax_cross_entropy_batch(logits, targets)
        self.backward(dlogits)
        return loss

    def param_entries(self):
        """Yield (layer_index, name, array) in declaration order."""
        for i, layer in enumerate(self.layers):
            for name, param in layer.param_items():
                yield i, name, param

    def parameter_count(self):
        return sum(p.size for _, _, p in self.param_entries())

    def get_state(self):
        """Copied parameter arrays, keyed by (layer index, name)."""
        return {(i, name): p.copy() for i, name, p in self.param_entries()}

    def set_state(self, state):
        for i, name, p in self.param_entries():
            src = state[(i, name)]
            if src.shape != p.shape:
                raise ValueError(
                    f"state shape {src.shape} != parameter shape {p.shape} "
                    f"for layer {i} '{name}'")
            np.copyto(p, src)

    def astype(self, dtype):
        """Cast all parameters in place (e.g. float64 for gradient checks)."""
        for layer in self.layers:
            for name in layer.params:
                layer.params[name] = layer.params[name].astype(dtype)
        return self

    def has_dropout(self):
        return any(isinstance(l, Dropout) and l.rate > 0 for l in self.layers)
