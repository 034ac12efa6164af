"""Analytic loss values from the method's definitions."""

import numpy as np
import pytest

from duca.errors import DataError, StructuralError
from duca.nn import cross_entropy, mse, softmax


def test_saturated_correct_prediction_has_near_zero_loss():
    logits = np.zeros((3, 5))
    y = np.array([1, 2, 0])
    logits[np.arange(3), y] = 1e6
    loss, _ = cross_entropy(logits, y)
    assert loss == pytest.approx(0.0, abs=1e-9)


def test_uniform_logits_give_log_k():
    logits = np.zeros((4, 10))
    y = np.array([0, 3, 7, 9])
    loss, grad = cross_entropy(logits, y)
    assert loss == pytest.approx(np.log(10), abs=1e-6)
    # gradient rows: softmax minus one-hot, scaled by 1/N
    assert grad.sum() == pytest.approx(0.0, abs=1e-12)


def test_cross_entropy_rejects_bad_labels():
    with pytest.raises(DataError):
        cross_entropy(np.zeros((2, 3)), np.array([0, 3]))
    with pytest.raises(DataError):
        cross_entropy(np.zeros((2, 3)), np.array([-1, 0]))


def test_mse_identical_logits_is_zero():
    a = np.random.default_rng(0).random((4, 6))
    loss, grad = mse(a, a.copy())
    assert loss == 0.0
    assert (grad == 0).all()


def test_mse_ones_vs_zeros_is_one():
    loss, _ = mse(np.ones((7, 3)), np.zeros((7, 3)))
    assert loss == pytest.approx(1.0)


def test_mse_hand_arithmetic():
    loss, grad = mse(np.array([[1.0, 3.0]]), np.array([[0.0, 1.0]]))
    assert loss == pytest.approx(2.5)
    assert np.allclose(grad, [[1.0, 2.0]])
    loss2, _ = mse(np.array([[2.0, 0.0]]), np.array([[0.0, 0.0]]))
    assert loss2 == pytest.approx(2.0)


def test_mse_shape_mismatch():
    with pytest.raises(StructuralError):
        mse(np.zeros((2, 3)), np.zeros((3, 2)))


def test_softmax_rows_sum_to_one():
    p = softmax(np.random.default_rng(1).random((5, 8)) * 10)
    assert np.allclose(p.sum(axis=1), 1.0, atol=1e-6)
    assert (p >= 0).all()
