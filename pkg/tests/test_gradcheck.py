import numpy as np
import pytest

from partdetect.nn import (Conv2D, Dense, Flatten, MaxPool2D, Network, ReLU,
                           gradient_check)
from partdetect.nn.gradcheck import (GRAD_FLOOR, analytic_gradients,
                                     numerical_gradient)


def conv_dense_net(seed, dtype=np.float64):
    """1 conv block + 2 dense layers on an 8x8 input, ~200 parameters."""
    rng = np.random.default_rng(seed)
    return Network([
        Conv2D(1, 3, 3, rng=rng, dtype=dtype),
        ReLU(),
        MaxPool2D(),
        Flatten(),
        Dense(3 * 3 * 3, 4, rng=rng, dtype=dtype),
        ReLU(),
        Dense(4, 2, rng=rng, dtype=dtype),
    ])


def dense_only_net(seed):
    rng = np.random.default_rng(seed)
    return Network([Dense(6, 5, rng=rng, dtype=np.float64),
                    Dense(5, 2, rng=rng, dtype=np.float64)])


def test_toy_conv_net_passes():
    net = conv_dense_net(0)
    x = np.random.default_rng(100).standard_normal((1, 1, 8, 8))
    assert gradient_check(net, x, 1, epsilon=1e-4) < 1e-4


@pytest.mark.parametrize("seed", range(20))
def test_passes_over_many_seeds(seed):
    net = conv_dense_net(seed)
    rng = np.random.default_rng(1000 + seed)
    x = rng.standard_normal((1, 1, 8, 8))
    target = int(rng.integers(0, 2))
    assert gradient_check(net, x, target, epsilon=1e-4) < 1e-4


def test_no_activation_kinks_error_is_truncation_dominated():
    # without ReLU/pool kinks the central-difference error scales with
    # eps^2, so a 10x larger step must show a clearly larger error
    net = dense_only_net(7)
    x = np.random.default_rng(8).standard_normal((1, 6))
    tight = gradient_check(net, x, 0, epsilon=1e-4)
    loose = gradient_check(net, x, 0, epsilon=1e-2)
    assert tight < 1e-6
    assert loose > tight


def test_corrupted_gradient_detected():
    # doubling the analytic gradients must show up at order one
    net = conv_dense_net(3)
    x = np.random.default_rng(99).standard_normal((1, 1, 8, 8))
    ana = analytic_gradients(net, x, 1)
    worst = 0.0
    for i, layer in enumerate(net.layers):
        for name, param in layer.param_items():
            num = numerical_gradient(net, x, 1, param, 1e-4)
            err = np.abs(2 * ana[(i, name)] - num) / np.maximum(
                np.abs(num), GRAD_FLOOR)
            worst = max(worst, float(err.max()))
    assert worst > 0.5


def test_stride_two_conv_gradients():
    rng = np.random.default_rng(11)
    net = Network([
        Conv2D(2, 2, 3, stride=(2, 2), rng=rng, dtype=np.float64),
        ReLU(),
        Flatten(),
        Dense(2 * 4 * 4, 2, rng=rng, dtype=np.float64),
    ])
    x = np.random.default_rng(12).standard_normal((1, 2, 9, 9))
    assert gradient_check(net, x, 0, epsilon=1e-4) < 1e-4


def test_odd_pool_input_gradients():
    # 7x7 conv output forces the pool to drop a trailing row/column
    rng = np.random.default_rng(13)
    net = Network([
        Conv2D(1, 2, 3, rng=rng, dtype=np.float64),
        ReLU(),
        MaxPool2D(),
        Flatten(),
        Dense(2 * 3 * 3, 2, rng=rng, dtype=np.float64),
    ])
    x = np.random.default_rng(14).standard_normal((1, 1, 9, 9))
    assert gradient_check(net, x, 0, epsilon=1e-4) < 1e-4
