import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from canet.errors import ConfigError, ContractError, DimensionError
from canet.tensor import Tensor, conv1d, dropout, gelu, matmul, no_grad, reduce_stats


def naive_matmul(a, b):
    m, k = a.shape
    _, n = b.shape
    out = np.zeros((m, n))
    for i in range(m):
        for j in range(n):
            for t in range(k):
                out[i, j] += a[i, t] * b[t, j]
    return out


def sliding_dot(x, k):
    n, width = len(x), len(k)
    pad = (width - 1) // 2
    xp = np.concatenate([np.zeros(pad), x, np.zeros(pad)])
    return np.array([sum(xp[t + j] * k[j] for j in range(width)) for t in range(n)])


class TestMatmul:
    def test_identity(self):
        b = np.random.default_rng(0).standard_normal((3, 2))
        np.testing.assert_array_equal(matmul(Tensor(np.eye(3)), Tensor(b)).data, b)

    def test_zero(self):
        b = np.random.default_rng(1).standard_normal((2, 2))
        np.testing.assert_array_equal(matmul(Tensor(np.zeros((2, 2))), Tensor(b)).data, np.zeros((2, 2)))

    def test_against_triple_loop(self):
        rng = np.random.default_rng(2)
        a, b = rng.standard_normal((4, 5)), rng.standard_normal((5, 3))
        np.testing.assert_allclose(matmul(Tensor(a), Tensor(b)).data, naive_matmul(a, b), atol=1e-12, rtol=0)

    def test_shape_error_names_both_shapes(self):
        with pytest.raises(DimensionError, match=r"\(2, 3\).*\(4, 5\)"):
            matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((4, 5))))

    def test_batch_broadcast(self):
        rng = np.random.default_rng(3)
        a, b = rng.standard_normal((2, 3, 4)), rng.standard_normal((4, 5))
        np.testing.assert_allclose(matmul(Tensor(a), Tensor(b)).data, a @ b)

    def test_linearity(self):
        rng = np.random.default_rng(4)
        a, b, c = rng.standard_normal((3, 4)), rng.standard_normal((4, 2)), rng.standard_normal((4, 2))
        lhs = matmul(Tensor(a), Tensor(b) + Tensor(c)).data
        rhs = matmul(Tensor(a), Tensor(b)).data + matmul(Tensor(a), Tensor(c)).data
        np.testing.assert_allclose(lhs, rhs, atol=1e-12, rtol=0)


class TestConv1d:
    def test_delta_kernel_is_identity(self):
        x = np.random.default_rng(0).standard_normal((1, 1, 8))
        out = conv1d(Tensor(x), Tensor(np.array([[[0.0, 1.0, 0.0]]])))
        np.testing.assert_array_equal(out.data, x)

    def test_zero_kernel(self):
        x = np.random.default_rng(0).standard_normal((2, 3, 5))
        out = conv1d(Tensor(x), Tensor(np.zeros((4, 3, 3))))
        assert out.shape == (2, 4, 5)
        assert not out.data.any()

    def test_against_sliding_window(self):
        rng = np.random.default_rng(5)
        x, k = rng.standard_normal(8), rng.standard_normal(3)
        out = conv1d(Tensor(x.reshape(1, 1, 8)), Tensor(k.reshape(1, 1, 3)))
        np.testing.assert_allclose(out.data.ravel(), sliding_dot(x, k), atol=1e-12, rtol=0)

    def test_even_kernel_rejected(self):
        with pytest.raises(ConfigError):
            conv1d(Tensor(np.ones((1, 1, 4))), Tensor(np.ones((1, 1, 2))))


class TestGelu:
    def test_zero(self):
        assert gelu(Tensor(np.array([0.0]))).data[0] == 0.0

    def test_saturates(self):
        assert abs(gelu(Tensor(np.array([20.0]))).data[0] - 20.0) < 1e-6

    def test_scalar_oracle(self):
        mpmath.mp.dps = 40
        x = mpmath.mpf(1)
        ref = 0.5 * x * (1 + mpmath.tanh(mpmath.sqrt(2 / mpmath.pi) * (x + mpmath.mpf("0.044715") * x**3)))
        assert gelu(Tensor(np.array([1.0]))).data[0] == pytest.approx(float(ref), abs=1e-15)


class TestReduceStats:
    def test_constant(self):
        mu, sd = reduce_stats(Tensor(np.array([3.0, 3.0, 3.0])), axis=0)
        assert mu.data[0] == 3.0
        assert sd.data[0] == pytest.approx(math.sqrt(1e-5), rel=1e-12)

    def test_symmetric_pair(self):
        mu, sd = reduce_stats(Tensor(np.array([-1.0, 1.0])), axis=0)
        assert mu.data[0] == 0.0
        assert sd.data[0] == pytest.approx(math.sqrt(1 + 1e-5), rel=1e-12)

    def test_two_pass_oracle(self):
        x = np.random.default_rng(6).standard_normal(7)
        mean = sum(x) / 7
        var = sum((v - mean) ** 2 for v in x) / 7
        mu, sd = reduce_stats(Tensor(x), axis=0)
        assert abs(mu.data[0] - mean) < 1e-12
        assert abs(sd.data[0] - math.sqrt(var + 1e-5)) < 1e-12

    @settings(max_examples=50, deadline=None)
    @given(
        arrays(np.float64, 6, elements=st.floats(-10, 10)),
        st.floats(0.1, 10),
        st.floats(-10, 10),
    )
    def test_affine_equivariance(self, x, a, b):
        mu, sd = reduce_stats(Tensor(x), axis=0)
        mu2, sd2 = reduce_stats(Tensor(a * x + b), axis=0)
        assert mu2.data[0] == pytest.approx(a * mu.data[0] + b, abs=1e-9)
        # exact up to the epsilon floor inside the square root
        var = float(x.var())
        assert sd2.data[0] == pytest.approx(math.sqrt(a * a * var + 1e-5), rel=1e-9)
        assert abs(sd2.data[0] - a * sd.data[0]) <= a * math.sqrt(1e-5) + math.sqrt(1e-5)


class TestDropout:
    def test_zero_probability(self):
        x = Tensor(np.ones(10))
        assert dropout(x, 0.0, True, np.random.default_rng(0)) is x

    def test_eval_identity(self):
        x = Tensor(np.ones(10))
        assert dropout(x, 0.7, False, None) is x

    def test_scaled_mean(self):
        out = dropout(Tensor(np.ones(100_000)), 0.5, True, np.random.default_rng(0))
        assert 0.97 <= out.data.mean() <= 1.03
        assert set(np.unique(out.data)) <= {0.0, 2.0}

    def test_bad_probability(self):
        with pytest.raises(ConfigError):
            dropout(Tensor(np.ones(3)), 1.0, True, np.random.default_rng(0))


class TestBackward:
    def test_sum_gives_ones(self):
        x = Tensor(np.random.default_rng(0).standard_normal((3, 4)), requires_grad=True)
        x.sum().backward()
        np.testing.assert_array_equal(x.grad, np.ones((3, 4)))

    def test_half_square(self):
        data = np.random.default_rng(1).standard_normal(5)
        x = Tensor(data, requires_grad=True)
        ((x * x).sum() * 0.5).backward()
        np.testing.assert_allclose(x.grad, data)

    def test_accumulates(self):
        x = Tensor(np.ones(3), requires_grad=True)
        x.sum().backward()
        x.sum().backward()
        np.testing.assert_array_equal(x.grad, 2 * np.ones(3))
        x.zero_grad()
        assert x.grad is None

    def test_non_scalar_rejected(self):
        x = Tensor(np.ones(3), requires_grad=True)
        with pytest.raises(ContractError):
            (x * 2).backward()

    def test_shared_subexpression(self):
        x = Tensor(np.array([2.0]), requires_grad=True)
        y = x * x
        (y * y).sum().backward()  # d/dx x^4 = 4 x^3
        assert x.grad[0] == pytest.approx(32.0)

    def test_no_grad_records_nothing(self):
        x = Tensor(np.ones(2), requires_grad=True)
        with no_grad():
            y = x * 3
        assert not y.requires_grad


class TestTensorInvariants:
    def test_data_is_copied_and_read_only(self):
        src = np.ones(4)
        t = Tensor(src)
        src[0] = 5
        assert t.data[0] == 1
        with pytest.raises(ValueError):
            t.data[0] = 2

    def test_views_do_not_leak_mutation(self):
        t = Tensor(np.arange(6.0))
        r = t.reshape(2, 3)
        with pytest.raises(ValueError):
            r.data[0, 0] = 9

    def test_grad_shape_matches(self):
        x = Tensor(np.ones((2, 3)), requires_grad=True)
        (x.mean(axis=0) * 3).sum().backward()
        assert x.grad.shape == x.shape
