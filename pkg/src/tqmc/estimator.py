"""Scikit-learn style wrapper around transport-map fitting.

``TransportMapSampler`` is a transformer from the unit cube to the target
space: ``fit`` trains the map against a target distribution, ``transform``
pushes cube points forward, ``inverse_transform`` pulls samples back.  It
follows the estimator conventions (constructor-only hyperparameters,
``get_params``/``set_params``, fitted attributes with trailing
underscores) so it composes with the wider ecosystem.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils import check_array

from . import flow, lowdisc, subspace as subspace_mod
from .targets import Target
from .train import FitConfig, derive_seed, fit


class TransportMapSampler(TransformerMixin, BaseEstimator):
    """Trains a transport map pushing Uniform[0,1]^d to a target density.

    Parameters mirror the fit configuration; ``subspace`` switches on
    relative-score PCA dimension reduction with the given sample count.
    """

    def __init__(self, n_layers: int = 3, shape_bound: int = 7, base: str = "gauss",
                 n_train: int = 256, restarts: int = 10, max_iter: int = 500,
                 subspace: int | None = None, subspace_threshold: float = 0.99,
                 random_state: int = 0):
        self.n_layers = n_layers
        self.shape_bound = shape_bound
        self.base = base
        self.n_train = n_train
        self.restarts = restarts
        self.max_iter = max_iter
        self.subspace = subspace
        self.subspace_threshold = subspace_threshold
        self.random_state = random_state

    def _config(self) -> FitConfig:
        return FitConfig(n_train=self.n_train, n_layers=self.n_layers,
                         shape_bound=self.shape_bound, base=self.base,
                         restarts=self.restarts, max_iter=self.max_iter)

    def fit(self, target: Target, y=None):
        """Fit the map to an unnormalized target (the "data" here is the
        target density object, not an array)."""
        config = self._config()
        template = None
        if self.subspace is not None:
            sub = subspace_mod.estimate_subspace(
                target, self.subspace, self.random_state,
                threshold=self.subspace_threshold)
            if sub.rank >= 1:
                template = subspace_mod.split_map_config(
                    sub, target.d, base=self.base, n_layers=self.n_layers,
                    shape_grid=flow.default_shape_grid(self.shape_bound))
            self.subspace_result_ = sub
        result = fit(target, config, self.random_state, template=template)
        self.map_ = result.map
        self.objective_ = result.objective
        self.trace_ = result.trace
        self.n_features_in_ = target.d
        return self

    def _check_fitted(self):
        if not hasattr(self, "map_"):
            raise NotFittedError("TransportMapSampler is not fitted")

    def transform(self, U):
        """Push cube points through the fitted map."""
        self._check_fitted()
        U = check_array(U, dtype=np.float64)
        if np.any(U < 0) or np.any(U > 1):
            raise ValueError("transform expects points in the unit cube")
        return flow.forward(self.map_, U).x

    def inverse_transform(self, X):
        self._check_fitted()
        X = check_array(X, dtype=np.float64)
        return flow.inverse(self.map_, X)

    def sample(self, n: int, seed: int | None = None, kind: str = "rqmc"):
        """Draw n samples and their log proposal density."""
        self._check_fitted()
        seed = self.random_state if seed is None else seed
        d = self.map_.d
        if kind == "rqmc":
            ps = lowdisc.rqmc_points(n, d, derive_seed(seed, "sample"))
        else:
            ps = lowdisc.mc_points(n, d, derive_seed(seed, "sample"))
        rec = flow.forward(self.map_, ps.points)
        return rec.x, -rec.logdet
