"""Scikit-learn facade for transport-map fitting."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from tqmc import TransportMapSampler
from tqmc.targets import gaussian_target, logistic_target, make_logistic_synthetic


@pytest.fixture(scope="module")
def fitted():
    target = gaussian_target(np.array([0.5, -0.5]), np.eye(2))
    est = TransportMapSampler(n_layers=1, shape_bound=5, n_train=128,
                              restarts=2, max_iter=60, random_state=0)
    return est.fit(target)


class TestEstimatorContract:
    def test_get_params_roundtrip(self):
        est = TransportMapSampler(n_layers=2, random_state=7)
        params = est.get_params()
        assert params["n_layers"] == 2
        cloned = clone(est)
        assert cloned.get_params() == params

    def test_set_params(self):
        est = TransportMapSampler().set_params(n_train=64)
        assert est.n_train == 64

    def test_unfitted_transform_raises(self):
        with pytest.raises(NotFittedError):
            TransportMapSampler().transform(np.full((2, 2), 0.5))


class TestFittedBehaviour:
    def test_fitted_attributes(self, fitted):
        assert fitted.n_features_in_ == 2
        assert np.isfinite(fitted.objective_)
        assert len(fitted.trace_) >= 1

    def test_transform_and_inverse_roundtrip(self, fitted):
        u = np.random.default_rng(0).uniform(0.05, 0.95, size=(20, 2))
        x = fitted.transform(u)
        assert x.shape == (20, 2)
        assert np.max(np.abs(fitted.inverse_transform(x) - u)) < 1e-8

    def test_transform_rejects_points_outside_cube(self, fitted):
        with pytest.raises(ValueError, match="unit cube"):
            fitted.transform(np.array([[1.5, 0.5]]))

    def test_sample_shapes_and_determinism(self, fitted):
        x1, logq1 = fitted.sample(64, seed=3)
        x2, logq2 = fitted.sample(64, seed=3)
        assert x1.shape == (64, 2) and logq1.shape == (64,)
        assert np.array_equal(x1, x2) and np.array_equal(logq1, logq2)

    def test_sample_recovers_target_mean(self, fitted):
        x, _ = fitted.sample(2**11, seed=1)
        assert np.max(np.abs(x.mean(axis=0) - [0.5, -0.5])) < 0.1


def test_subspace_mode():
    target = logistic_target(make_logistic_synthetic(d=10, n_obs=8, seed=1))
    est = TransportMapSampler(n_layers=1, shape_bound=4, n_train=64,
                              restarts=1, max_iter=20, subspace=64,
                              random_state=0)
    est.fit(target)
    assert hasattr(est, "subspace_result_")
    assert est.map_.tri_rank == est.subspace_result_.rank
    assert est.map_.rotation is not None
