import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from agsc import tensor as T

finite = st.floats(-50, 50, allow_nan=False)


@given(arrays(np.float64, st.integers(1, 12), elements=finite))
def test_softmax_is_a_distribution(v):
    p = T.softmax(v)
    assert np.all(p >= 0)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)


@given(arrays(np.float64, st.integers(1, 12), elements=finite))
def test_log_softmax_matches_log_of_softmax(v):
    np.testing.assert_allclose(np.exp(T.log_softmax(v)), T.softmax(v), rtol=1e-12, atol=1e-300)


def test_softmax_survives_huge_logits():
    p = T.softmax(np.array([1e300, 0.0, -1e300]))
    assert p.tolist() == [1.0, 0.0, 0.0]


def test_matmul_rejects_mismatched_shapes():
    with pytest.raises(T.ShapeError):
        T.matmul(np.zeros((2, 3)), np.zeros((4, 5)))


def test_layer_norm_normalises():
    rng = np.random.default_rng(0)
    x = rng.normal(3.0, 2.0, size=(4, 16))
    y = T.layer_norm(x, np.ones(16), np.zeros(16), eps=1e-12)
    np.testing.assert_allclose(y.mean(axis=-1), 0.0, atol=1e-12)
    np.testing.assert_allclose(y.var(axis=-1), 1.0, rtol=1e-9)


def test_layer_norm_backward_against_finite_differences():
    rng = np.random.default_rng(1)
    x, g, b = rng.normal(size=(3, 6)), rng.normal(size=6), rng.normal(size=6)
    w = rng.normal(size=(3, 6))

    def f(x_, g_, b_):
        return float((T.layer_norm(x_, g_, b_) * w).sum())

    _, (xhat, inv_std) = T.layer_norm_fwd(x, g, b)
    dx, dg, db = T.layer_norm_bwd(w, g, xhat, inv_std)
    h = 1e-6
    for arr, grad, which in ((x, dx, 0), (g, dg, 1), (b, db, 2)):
        num = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            args = [x.copy(), g.copy(), b.copy()]
            args[which][idx] += h
            up = f(*args)
            args[which][idx] -= 2 * h
            num[idx] = (up - f(*args)) / (2 * h)
        np.testing.assert_allclose(grad, num, rtol=1e-6, atol=1e-8)


def test_gelu_values_and_gradient():
    assert T.gelu(np.array([0.0]))[0] == 0.0
    # x * Phi(x) at x = 1
    assert T.gelu(np.array([1.0]))[0] == pytest.approx(0.8413447460685429, abs=1e-15)
    x = np.linspace(-4, 4, 41)
    h = 1e-6
    num = (T.gelu(x + h) - T.gelu(x - h)) / (2 * h)
    np.testing.assert_allclose(T.gelu_grad(x), num, atol=1e-8)


def test_cross_entropy():
    assert T.cross_entropy(np.zeros(4), 2) == pytest.approx(np.log(4))
    with pytest.raises(T.ShapeError):
        T.cross_entropy(np.zeros(4), 4)


@settings(max_examples=25)
@given(st.integers(2, 30))
def test_uniform_cross_entropy_is_log_v(v):
    assert T.cross_entropy(np.full(v, 0.7), 0) == pytest.approx(np.log(v), rel=1e-12)
