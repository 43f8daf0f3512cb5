"""Plain SGD with momentum. Update rule: v <- momentum*v + g; w <- w - lr*v."""

import numpy as np


def sgd_step(param, grad, velocity, lr, momentum):
    """Update one parameter array in place; returns the updated velocity.

    ``param`` and ``velocity`` are mutated. Shapes of all three arrays must
    agree and ``lr`` must be positive.
    """
    if param.shape != grad.shape or param.shape != velocity.shape:
        raise ValueError(
            f"shape mismatch: param {param.shape}, grad {grad.shape}, "
            f"velocity {velocity.shape}")
    if lr <= 0:
        raise ValueError(f"learning rate must be > 0, got {lr}")
    velocity *= momentum
    velocity += grad
    param -= lr * velocity
    return velocity


class SGDMomentum:
    """Momentum-SGD over every parameter of a network.

    Velocity buffers are keyed by (layer index, parameter name) and created
    lazily on the first step.
    """

    def __init__(self, lr=0.01, momentum=0.9):
        if lr <= 0:
            raise ValueError(f"learning rate must be > 0, got {lr}")
        self.lr = lr
        self.momentum = momentum
        self.velocity = {}

    def step(self, network):
        for i, layer in enumerate(network.layers):
            for name, param in layer.param_items():
                grad = layer.grads[name]
                key = (i, name)
                if key not in self.velocity:
                    self.velocity[key] = np.zeros_like(param)
                sgd_step(param, grad, self.velocity[key], self.lr, self.momentum)
