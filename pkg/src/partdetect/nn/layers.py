"""Minimal CNN building blocks with explicit forward/backward passes.

Layers operate on float numpy arrays in NCHW layout (batch, channels,
height, width) for the convolutional section and (batch, features) after
flattening. Each layer caches whatever the backward pass needs, stores
parameter gradients in ``self.grads``, and returns the gradient with
respect to its input so layers chain into a network.

Conventions fixed here:

- Convolution is cross-correlation (no kernel flip) with valid padding.
- Max-pooling is 2x2 / stride 2; an odd trailing row/column is dropped.
- ReLU gradient at exactly 0 is 0.
- Dropout is inverted (survivors scaled by 1/(1-rate) at train time), so
  inference is the exact identity.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class Layer:
    """Base class: parameter-free identity-ish layer."""

    def __init__(self):
        self.params = {}
        self.grads = {}

    def forward(self, x, train=False, rng=None):
        raise NotImplementedError

    def backward(self, dy):
        raise NotImplementedError

    def param_items(self):
        """Yield (name, array) pairs in declaration order."""
        yield from self.params.items()


class Conv2D(Layer):
    """Valid cross-correlation with per-output-channel bias.

    Kernels have shape (out_channels, in_channels, kh, kw); bias has shape
    (out_channels,). Output spatial dims are floor((H - kh) / stride) + 1.
    """

    def __init__(self, in_channels, out_channels, kernel_size, stride=(1, 1),
                 rng=None, dtype=np.float32):
        super().__init__()
        if isinstance(kernel_size, int):
            kernel_size = (kernel_size, kernel_size)
        if isinstance(stride, int):
            stride = (stride, stride)
        kh, kw = kernel_size
        if kh < 1 or kw < 1:
            raise ValueError(f"kernel size must be >= 1, got {kernel_size}")
        if stride[0] < 1 or stride[1] < 1:
            raise ValueError(f"stride must be positive, got {stride}")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = (kh, kw)
        self.stride = tuple(stride)
        if rng is None:
            rng = np.random.default_rng()
        # Kaiming fan-in scaling, suitable for the ReLU stacks used here.
        fan_in = in_channels * kh * kw
        scale = np.sqrt(2.0 / fan_in)
        self.params["kernels"] = (rng.standard_normal(
            (out_channels, in_channels, kh, kw)) * scale).astype(dtype)
        self.params["bias"] = np.zeros(out_channels, dtype=dtype)
        self._cache = None

    def output_shape(self, in_shape):
        """(C, H, W) -> (C', H', W') for this layer, validating geometry."""
        c, h, w = in_shape
        if c != self.in_channels:
            raise ValueError(
                f"conv expects {self.in_channels} input channels, got {c}")
        kh, kw = self.kernel_size
        sh, sw = self.stride
        if kh > h or kw > w:
            raise ValueError(
                f"kernel {self.kernel_size} larger than input {h}x{w}")
        return (self.out_channels, (h - kh) // sh + 1, (w - kw) // sw + 1)

    def forward(self, x, train=False, rng=None):
        n, c, h, w = x.shape
        _, hp, wp = self.output_shape((c, h, w))
        kh, kw = self.kernel_size
        sh, sw = self.stride
        k = self.params["kernels"]
        # im2col: (N, C, H', W', kh, kw) view -> (N*H'*W', C*kh*kw) matrix
        windows = sliding_window_view(x, (kh, kw), axis=(2, 3))[:, :, ::sh, ::sw]
        cols = np.ascontiguousarray(windows.transpose(0, 2, 3, 1, 4, 5))
        cols = cols.reshape(n * hp * wp, c * kh * kw)
        kmat = k.reshape(self.out_channels, -1)
        y = cols @ kmat.T + self.params["bias"]
        y = y.reshape(n, hp, wp, self.out_channels).transpose(0, 3, 1, 2)
        self._cache = (cols, x.shape, (hp, wp))
        return np.ascontiguousarray(y)

    def backward(self, dy):
        cols, x_shape, (hp, wp) = self._cache
        n, c, h, w = x_shape
        kh, kw = self.kernel_size
        sh, sw = self.stride
        kmat = self.params["kernels"].reshape(self.out_channels, -1)
        dymat = dy.transpose(0, 2, 3, 1).reshape(n * hp * wp, self.out_channels)
        self.grads["kernels"] = (dymat.T @ cols).reshape(
            self.params["kernels"].shape)
        self.grads["bias"] = dy.sum(axis=(0, 2, 3))
        dcols = (dymat @ kmat).reshape(n, hp, wp, c, kh, kw)
        dcols = dcols.transpose(0, 3, 1, 2, 4, 5)
        dx = np.zeros(x_shape, dtype=dy.dtype)
        for i in range(kh):
            for j in range(kw):
                dx[:, :, i:i + sh * hp:sh, j:j + sw * wp:sw] += dcols[..., i, j]
        return dx


class MaxPool2D(Layer):
    """2x2 max-pooling with stride 2; odd trailing row/column is dropped.

    The gradient routes each upstream value to the argmax cell of its block
    (first occurrence on ties) and is zero elsewhere.
    """

    def forward(self, x, train=False, rng=None):
        n, c, h, w = x.shape
        ht, wt = h - h % 2, w - w % 2
        if ht < 2 or wt < 2:
            raise ValueError(f"input {h}x{w} too small for 2x2 pooling")
        blocks = x[:, :, :ht, :wt].reshape(n, c, ht // 2, 2, wt // 2, 2)
        blocks = blocks.transpose(0, 1, 2, 4, 3, 5).reshape(
            n, c, ht // 2, wt // 2, 4)
        idx = blocks.argmax(axis=-1)
        y = np.take_along_axis(blocks, idx[..., None], axis=-1)[..., 0]
        self._cache = (x.shape, idx)
        return y

    @staticmethod
    def output_shape(in_shape):
        c, h, w = in_shape
        if h < 2 or w < 2:
            raise ValueError(f"input {h}x{w} too small for 2x2 pooling")
        return (c, h // 2, w // 2)

    def backward(self, dy):
        x_shape, idx = self._cache
        n, c, h, w = x_shape
        ht, wt = h - h % 2, w - w % 2
        dblocks = np.zeros((n, c, ht // 2, wt // 2, 4), dtype=dy.dtype)
        np.put_along_axis(dblocks, idx[..., None], dy[..., None], axis=-1)
        dx = np.zeros(x_shape, dtype=dy.dtype)
        dx[:, :, :ht, :wt] = dblocks.reshape(
            n, c, ht // 2, wt // 2, 2, 2).transpose(
            0, 1, 2, 4, 3, 5).reshape(n, c, ht, wt)
        return dx


class ReLU(Layer):
    def forward(self, x, train=False, rng=None):
        mask = x > 0
        self._cache = mask
        return x * mask

    def backward(self, dy):
        return dy * self._cache


class Flatten(Layer):
    def forward(self, x, train=False, rng=None):
        self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy):
        return dy.reshape(self._cache)


class Dense(Layer):
    """Fully connected layer y = x @ W.T + b with W of shape (out, in)."""

    def __init__(self, in_dim, out_dim, rng=None, dtype=np.float32):
        super().__init__()
        if in_dim < 1 or out_dim < 1:
            raise ValueError(f"dense dims must be >= 1, got {in_dim}->{out_dim}")
        self.in_dim = in_dim
        self.out_dim = out_dim
        if rng is None:
            rng = np.random.default_rng()
        scale = np.sqrt(2.0 / in_dim)
        self.params["weights"] = (rng.standard_normal(
            (out_dim, in_dim)) * scale).astype(dtype)
        self.params["bias"] = np.zeros(out_dim, dtype=dtype)
        self._cache = None

    def forward(self, x, train=False, rng=None):
        if x.shape[1] != self.in_dim:
            raise ValueError(
                f"dense expects {self.in_dim} inputs, got {x.shape[1]}")
        self._cache = x
        return x @ self.params["weights"].T + self.params["bias"]

    def backward(self, dy):
        x = self._cache
        self.grads["weights"] = dy.T @ x
        self.grads["bias"] = dy.sum(axis=0)
        return dy @ self.params["weights"]


class Dropout(Layer):
    """Inverted dropout: zero units with probability ``rate`` at train time
    and scale survivors by 1/(1-rate); identity at inference."""

    def __init__(self, rate):
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate
        self._cache = None

    def forward(self, x, train=False, rng=None):
        if not train or self.rate == 0.0:
            self._cache = None
            return x
        if rng is None:
            raise ValueError("dropout in train mode needs an rng")
        keep = (rng.random(x.shape) >= self.rate).astype(x.dtype)
        keep /= (1.0 - self.rate)
        self._cache = keep
        return x * keep

    def backward(self, dy):
        if self._cache is None:
            return dy
        return dy * self._cache
