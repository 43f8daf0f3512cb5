"""Finite-difference verification of the analytic backward passes.

Each parameter is perturbed by +/-epsilon and the central difference
(L(w+eps) - L(w-eps)) / 2eps is compared against the backpropagated
gradient. Run in float64 with epsilon around 1e-4; float32 drowns the
difference quotient in rounding noise.
"""

import numpy as np

from .loss import softmax_cross_entropy_batch

# Gradients smaller than this are compared on an absolute scale: for a
# tiny true gradient the eps^2 truncation term of the central difference
# can exceed any relative tolerance without indicating a wrong backward.
GRAD_FLOOR = 1e-3


def network_loss(network, x, target):
    """Scalar cross-entropy of one sample, inference mode (no dropout)."""
    logits = network.forward(x, train=False)
    _, loss, _ = softmax_cross_entropy_batch(logits, [target])
    return loss


def analytic_gradients(network, x, target):
    """Backprop gradients for one sample, keyed by (layer index, name)."""
    logits = network.forward(x, train=False)
    _, _, dlogits = softmax_cross_entropy_batch(logits, [target])
    network.backward(dlogits)
    return {(i, name): layer.grads[name].copy()
            for i, layer in enumerate(network.layers)
            for name, _ in layer.param_items()}


def numerical_gradient(network, x, target, param, epsilon):
    """Central finite differences over every element of ``param``."""
    grad = np.zeros_like(param)
    flat = param.reshape(-1)
    gflat = grad.reshape(-1)
    for j in range(flat.size):
        orig = flat[j]
        flat[j] = orig + epsilon
        up = network_loss(network, x, target)
        flat[j] = orig - epsilon
        down = network_loss(network, x, target)
        flat[j] = orig
        gflat[j] = (up - down) / (2.0 * epsilon)
    return grad


def gradient_check(network, x, target, epsilon=1e-4):
    """Max relative error between analytic and numerical gradients.

    The error per element is |a - n| / max(|n|, GRAD_FLOOR). The network
    must be deterministic in inference mode (dropout disabled there by
    construction).
    """
    analytic = analytic_gradients(network, x, target)
    worst = 0.0
    for i, layer in enumerate(network.layers):
        for name, param in layer.param_items():
            num = numerical_gradient(network, x, target, param, epsilon)
            ana = analytic[(i, name)]
            denom = np.maximum(np.abs(num), GRAD_FLOOR)
            err = np.abs(ana - num) / denom
            worst = max(worst, float(err.max()))
    return worst
