"""From-scratch CNN engine: layers, loss, optimizer, gradient checker."""

from .layers import Conv2D, Dense, Dropout, Flatten, Layer, MaxPool2D, ReLU
from .loss import softmax, softmax_cross_entropy, softmax_cross_entropy_batch
from .network import Network
from .optim import SGDMomentum, sgd_step
from .gradcheck import gradient_check, numerical_gradient

__all__ = [
    "Conv2D", "Dense", "Dropout", "Flatten", "Layer", "MaxPool2D", "ReLU",
    "softmax", "softmax_cross_entropy", "softmax_cross_entropy_batch",
    "Network", "SGDMomentum", "sgd_step",
    "gradient_check", "numerical_gradient",
]
