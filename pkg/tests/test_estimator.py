import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from evcodec.estimator import BlockAutoencoder


@pytest.fixture(scope="module")
def fitted():
    rng = np.random.default_rng(0)
    protos = np.eye(3).repeat(3, axis=1)  # three 9-wide one-hot band patterns
    X = protos[rng.integers(0, 3, size=90)] * 0.9 + 0.05
    est = BlockAutoencoder(layer_sizes=(9, 6, 2), epochs=15, batch_size=10,
                           random_state=1)
    return est.fit(X), X


def test_get_set_params_round_trip():
    est = BlockAutoencoder(epochs=5, random_state=9)
    params = est.get_params()
    assert params["epochs"] == 5 and params["random_state"] == 9
    est.set_params(epochs=2)
    assert est.epochs == 2
    clone(est)  # must not raise


def test_requires_fit_before_transform():
    est = BlockAutoencoder(layer_sizes=(9, 6, 2))
    with pytest.raises(NotFittedError):
        est.transform(np.zeros((1, 9)))
    with pytest.raises(NotFittedError):
        est.inverse_transform(np.zeros((1, 2)))


def test_transform_and_inverse_shapes(fitted):
    est, X = fitted
    Z = est.transform(X)
    assert Z.shape == (len(X), 2)
    back = est.inverse_transform(Z)
    assert back.shape == X.shape
    assert back.min() >= 0.0 and back.max() <= 1.0


def test_transform_deterministic(fitted):
    est, X = fitted
    np.testing.assert_array_equal(est.transform(X), est.transform(X))


def test_score_improves_over_untrained(fitted):
    est, X = fitted
    fresh = BlockAutoencoder(layer_sizes=(9, 6, 2), epochs=0, random_state=1).fit(X)
    assert est.score(X) > fresh.score(X)


def test_fit_rejects_bad_input():
    est = BlockAutoencoder(layer_sizes=(9, 6, 2), epochs=1)
    with pytest.raises(ValueError, match=r"\[0, 1\]"):
        est.fit(np.full((4, 9), 2.0))
    with pytest.raises(ValueError, match="columns"):
        est.fit(np.zeros((4, 5)))


def test_transform_rejects_wrong_width(fitted):
    est, _ = fitted
    with pytest.raises(ValueError, match="columns"):
        est.transform(np.zeros((1, 5)))


def test_model_attribute_records_quant_scale():
    X = np.random.default_rng(0).random((20, 9))
    est = BlockAutoencoder(layer_sizes=(9, 4, 2), epochs=1, quant_scale=4.0,
                           random_state=0).fit(X)
    assert est.model_.quant_scale == 4.0
    assert est.loss_ == pytest.approx(-est.score(X))
