import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from canet.errors import ConfigError, DimensionError
from canet.kronecker import (
    KronFactors,
    balanced_divisor,
    choose_factor_shapes,
    dense_param_count,
    factor_param_count,
    is_degenerate,
    skpl_forward,
    skpl_param_count,
)
from canet.tensor import Tensor


@pytest.mark.parametrize("m,d", [(64, 8), (96, 8), (13, 1), (1, 1), (2, 2), (24, 4), (720, 24)])
def test_balanced_divisor(m, d):
    assert balanced_divisor(m) == d


def test_factor_shapes():
    assert choose_factor_shapes(64, 96) == ((8, 8), (8, 12))
    assert choose_factor_shapes(13, 8) == ((1, 2), (13, 4))
    with pytest.raises(ConfigError):
        choose_factor_shapes(0, 4)


def test_identity_factors(rng):
    f = KronFactors([Tensor(np.eye(2))], [Tensor(np.eye(3))], Tensor(np.zeros(6)))
    x = rng.standard_normal((4, 6))
    np.testing.assert_array_equal(skpl_forward(Tensor(x), f).data, x)


def test_scalar_factors():
    f = KronFactors([Tensor(np.array([[2.0]]))], [Tensor(np.array([[3.0]]))], Tensor(np.array([1.0])))
    assert skpl_forward(Tensor(np.array([[5.0]])), f).data[0, 0] == 31.0


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 24), st.integers(1, 24), st.sampled_from([1, 2, 3]), st.integers(0, 10_000))
def test_matches_materialized_kron(m, n, depth, seed):
    r = np.random.default_rng(seed)
    f = KronFactors.init(m, n, r, depth=depth)
    f.bias.data = r.standard_normal(m)
    x = r.standard_normal((5, n))
    ref = x @ f.materialize().T + f.bias.data
    assert np.abs(skpl_forward(Tensor(x), f).data - ref).max() < 1e-10


def test_input_width_checked(rng):
    with pytest.raises(DimensionError):
        skpl_forward(Tensor(np.zeros((1, 5))), KronFactors.init(4, 6, rng))


def test_counts():
    assert factor_param_count(16, 16, 2) == 2 * (16 + 16) + 16
    assert dense_param_count(16, 16) == 272
    assert dense_param_count(256, 256) == 65792
    assert factor_param_count(256, 256, 2) == 2 * (256 + 256) + 256
    assert factor_param_count(1, 1, 1) == 3
    assert dense_param_count(1, 1) == 2


def test_counts_agree_with_instance(rng):
    f = KronFactors.init(24, 40, rng, depth=3)
    assert skpl_param_count(f) == factor_param_count(24, 40, 3)


@settings(max_examples=200, deadline=None)
@given(st.integers(16, 400), st.integers(16, 400), st.sampled_from([1, 2, 3]))
def test_fewer_params_than_dense(m, n, depth):
    if is_degenerate(m, n):
        return
    assert factor_param_count(m, n, depth) < dense_param_count(m, n)


def test_degenerate_detection():
    assert is_degenerate(13, 17)
    assert is_degenerate(13, 16)
    assert factor_param_count(13, 17, 1) == dense_param_count(13, 17) + 1
    assert not is_degenerate(24, 96)
