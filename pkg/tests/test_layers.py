import numpy as np
import pytest

from partdetect.nn import Conv2D, Dense, Dropout, Flatten, MaxPool2D, ReLU


def make_conv(kernels, bias, stride=(1, 1)):
    out_c, in_c, kh, kw = np.asarray(kernels).shape
    conv = Conv2D(in_c, out_c, (kh, kw), stride=stride,
                  rng=np.random.default_rng(0), dtype=np.float64)
    conv.params["kernels"] = np.asarray(kernels, dtype=np.float64)
    conv.params["bias"] = np.asarray(bias, dtype=np.float64)
    return conv


class TestConv2D:
    def test_hand_dot_product(self):
        # 1x2x2 input against a 2x2 kernel with corners 1: 1*1 + 4*1 = 5
        conv = make_conv([[[[1, 0], [0, 1]]]], [0])
        x = np.array([[[[1, 2], [3, 4]]]], dtype=np.float64)
        y = conv.forward(x)
        assert y.shape == (1, 1, 1, 1)
        assert y[0, 0, 0, 0] == 5.0

    def test_identity_1x1_kernel(self):
        conv = make_conv([[[[1.0]]]], [0])
        x = np.random.default_rng(1).random((2, 1, 5, 7))
        assert np.array_equal(conv.forward(x), x)

    def test_zero_kernels_annihilate(self):
        conv = make_conv(np.zeros((3, 2, 3, 3)), np.zeros(3))
        x = np.random.default_rng(2).random((1, 2, 6, 6))
        assert np.all(conv.forward(x) == 0.0)

    def test_bias_per_output_channel(self):
        conv = make_conv(np.zeros((2, 1, 1, 1)), [1.5, -2.0])
        y = conv.forward(np.zeros((1, 1, 3, 3)))
        assert np.all(y[0, 0] == 1.5)
        assert np.all(y[0, 1] == -2.0)

    def test_channel_mismatch_rejected(self):
        conv = Conv2D(3, 4, 3, rng=np.random.default_rng(0))
        with pytest.raises(ValueError, match="channels"):
            conv.forward(np.zeros((1, 2, 8, 8), dtype=np.float32))

    def test_kernel_larger_than_input_rejected(self):
        conv = Conv2D(1, 1, 5, rng=np.random.default_rng(0))
        with pytest.raises(ValueError, match="larger than input"):
            conv.forward(np.zeros((1, 1, 4, 4), dtype=np.float32))

    def test_valid_geometry(self):
        conv = Conv2D(3, 8, 3, stride=(2, 2), rng=np.random.default_rng(0))
        assert conv.output_shape((3, 11, 9)) == (8, 5, 4)

    def test_backward_shapes_match_params(self):
        conv = Conv2D(2, 3, 3, rng=np.random.default_rng(0), dtype=np.float64)
        x = np.random.default_rng(3).random((2, 2, 6, 6))
        y = conv.forward(x)
        dx = conv.backward(np.ones_like(y))
        assert dx.shape == x.shape
        for name, p in conv.param_items():
            assert conv.grads[name].shape == p.shape


class TestMaxPool2D:
    def test_single_block(self):
        pool = MaxPool2D()
        x = np.array([[[[1, 2], [3, 4]]]], dtype=np.float64)
        assert pool.forward(x)[0, 0, 0, 0] == 4.0

    def test_constant_image_stays_constant(self):
        pool = MaxPool2D()
        x = np.full((1, 2, 8, 6), 3.25)
        y = pool.forward(x)
        assert y.shape == (1, 2, 4, 3)
        assert np.all(y == 3.25)

    def test_per_block_max_by_hand(self):
        # 4x4 of 1..16 row-major: block maxima are 6, 8, 14, 16
        pool = MaxPool2D()
        x = np.arange(1, 17, dtype=np.float64).reshape(1, 1, 4, 4)
        assert np.array_equal(pool.forward(x)[0, 0], [[6, 8], [14, 16]])

    def test_odd_dims_drop_trailing(self):
        pool = MaxPool2D()
        x = np.arange(25, dtype=np.float64).reshape(1, 1, 5, 5)
        y = pool.forward(x)
        # last row/column (values 20..24 and col 4) never participate
        assert y.shape == (1, 1, 2, 2)
        assert np.array_equal(y[0, 0], [[6, 8], [16, 18]])

    def test_gradient_routes_to_argmax(self):
        pool = MaxPool2D()
        x = np.array([[[[1, 2], [3, 4]]]], dtype=np.float64)
        pool.forward(x)
        dx = pool.backward(np.array([[[[5.0]]]]))
        assert np.array_equal(dx[0, 0], [[0, 0], [0, 5]])

    def test_tie_routes_once(self):
        pool = MaxPool2D()
        x = np.ones((1, 1, 2, 2))
        pool.forward(x)
        dx = pool.backward(np.array([[[[1.0]]]]))
        assert dx.sum() == 1.0


class TestReLU:
    def test_elementwise_max(self):
        y = ReLU().forward(np.array([[-1.0, 0.0, 2.0]]))
        assert np.array_equal(y, [[0, 0, 2]])

    def test_nonnegative_unchanged(self):
        relu = ReLU()
        x = np.random.default_rng(4).random((3, 5))
        assert np.array_equal(relu.forward(x), x)

    def test_gradient_mask(self):
        relu = ReLU()
        relu.forward(np.array([[-1.0, 2.0]]))
        dx = relu.backward(np.array([[5.0, 5.0]]))
        assert np.array_equal(dx, [[0, 5]])

    def test_gradient_zero_at_zero(self):
        relu = ReLU()
        relu.forward(np.array([[0.0]]))
        assert relu.backward(np.array([[7.0]]))[0, 0] == 0.0


def make_dense(weights, bias):
    w = np.asarray(weights, dtype=np.float64)
    dense = Dense(w.shape[1], w.shape[0], rng=np.random.default_rng(0),
                  dtype=np.float64)
    dense.params["weights"] = w
    dense.params["bias"] = np.asarray(bias, dtype=np.float64)
    return dense


class TestDense:
    def test_identity(self):
        dense = make_dense(np.eye(3), np.zeros(3))
        x = np.array([[1.0, 2.0, 3.0]])
        assert np.array_equal(dense.forward(x), x)

    def test_hand_matrix_vector(self):
        dense = make_dense([[1, 0], [0, 2]], [1, 0])
        y = dense.forward(np.array([[3.0, 4.0]]))
        assert np.array_equal(y, [[4, 8]])

    def test_zero_weights_give_bias(self):
        dense = make_dense(np.zeros((1, 4)), [7.0])
        for x in (np.zeros((1, 4)), np.ones((1, 4)) * 9):
            assert dense.forward(x)[0, 0] == 7.0

    def test_dimension_mismatch(self):
        dense = Dense(4, 2, rng=np.random.default_rng(0))
        with pytest.raises(ValueError, match="expects 4"):
            dense.forward(np.zeros((1, 3), dtype=np.float32))

    def test_backward_gradients(self):
        dense = make_dense([[1, 0], [0, 2]], [0, 0])
        x = np.array([[3.0, 4.0]])
        dense.forward(x)
        dy = np.array([[1.0, 2.0]])
        dx = dense.backward(dy)
        # dW = upstream (x) outer x, db = upstream, dx = W^T upstream
        assert np.array_equal(dense.grads["weights"], [[3, 4], [6, 8]])
        assert np.array_equal(dense.grads["bias"], [1, 2])
        assert np.array_equal(dx, [[1, 4]])


class TestDropout:
    def test_inference_is_exact_identity(self):
        drop = Dropout(0.5)
        x = np.random.default_rng(5).random((4, 7))
        assert drop.forward(x, train=False) is x

    def test_rate_zero_unchanged_in_both_modes(self):
        drop = Dropout(0.0)
        x = np.random.default_rng(6).random((3, 3))
        rng = np.random.default_rng(0)
        assert np.array_equal(drop.forward(x, train=True, rng=rng), x)
        assert np.array_equal(drop.forward(x, train=False), x)

    def test_mean_preserved_at_half_rate(self):
        # inverted dropout keeps the expectation: 1e5 ones stay near mean 1
        drop = Dropout(0.5)
        x = np.ones(100_000).reshape(1, -1)
        y = drop.forward(x, train=True, rng=np.random.default_rng(42))
        assert 0.98 <= y.mean() <= 1.02

    def test_survivors_scaled(self):
        drop = Dropout(0.25)
        x = np.ones((1, 1000))
        y = drop.forward(x, train=True, rng=np.random.default_rng(7))
        kept = y[y != 0]
        assert np.allclose(kept, 1.0 / 0.75)

    def test_invalid_rate(self):
        with pytest.raises(ValueError):
            Dropout(1.0)
        with pytest.raises(ValueError):
            Dropout(-0.1)


class TestFlatten:
    def test_round_trip(self):
        flat = Flatten()
        x = np.random.default_rng(8).random((2, 3, 4, 5))
        y = flat.forward(x)
        assert y.shape == (2, 60)
        assert np.array_equal(flat.backward(y), x)


def test_forward_ops_preserve_finiteness():
    rng = np.random.default_rng(9)
    x = rng.standard_normal((2, 3, 12, 12)).astype(np.float32) * 100
    conv = Conv2D(3, 4, 3, rng=rng)
    y = conv.forward(x)
    y = ReLU().forward(y)
    y = MaxPool2D().forward(y)
    y = Flatten().forward(y)
    y = Dense(y.shape[1], 2, rng=rng).forward(y)
    assert np.isfinite(y).all()
