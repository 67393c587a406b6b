"""Relative-score PCA and the split transport-map configuration."""

import numpy as np
import pytest

from conftest import fd_grad
from tqmc import flow
from tqmc.subspace import (
    SubspaceError,
    estimate_subspace,
    relative_score,
    split_map_config,
)
from tqmc.targets import gaussian_target, logistic_target, make_logistic_synthetic


class TestRelativeScore:
    def test_standard_normal_is_zero(self):
        t = gaussian_target(np.zeros(3), np.eye(3))
        x = np.random.default_rng(0).standard_normal((10, 3))
        assert np.allclose(relative_score(t, x), 0.0, atol=1e-12)

    def test_mean_shift_is_constant(self):
        mu = np.array([2.0, -1.0])
        t = gaussian_target(mu, np.eye(2))
        x = np.random.default_rng(1).standard_normal((10, 2))
        assert np.allclose(relative_score(t, x), mu, atol=1e-12)

    def test_fd_against_log_ratio(self):
        t = gaussian_target(np.array([0.3, -0.7]), np.array([[1.5, 0.2], [0.2, 0.8]]))

        def log_ratio(x):
            return t.log_density(x[None, :])[0] + 0.5 * float(x @ x)

        rng = np.random.default_rng(2)
        for x in rng.standard_normal((10, 2)):
            fd = fd_grad(log_ratio, x)
            got = relative_score(t, x[None, :])[0]
            assert np.max(np.abs(got - fd)) < 1e-5


class TestEstimateSubspace:
    def test_rank_one_mean_shift(self):
        e1 = np.zeros(5)
        e1[0] = 1.0
        t = gaussian_target(e1, np.eye(5))
        sub = estimate_subspace(t, 8, seed=0)
        assert sub.rank == 1
        assert np.max(sub.eigenvalues[1:]) <= 1e-10 * sub.eigenvalues[0]
        assert abs(sub.v_r[:, 0] @ e1) >= 1 - 1e-8

    def test_degenerate_path_when_target_equals_reference(self):
        t = gaussian_target(np.zeros(3), np.eye(3))
        sub = estimate_subspace(t, 16, seed=1)
        assert sub.degenerate
        assert sub.rank == 0
        assert np.array_equal(sub.v_full, np.eye(3))

    def test_logistic_synthetic_rank_small(self):
        t = logistic_target(make_logistic_synthetic(seed=0))
        sub = estimate_subspace(t, 256, seed=3)
        assert 1 <= sub.rank <= 10
        assert sub.explained_ratio >= 0.99

    def test_eigenvalue_sum_equals_trace(self):
        t = logistic_target(make_logistic_synthetic(d=8, n_obs=10, seed=1))
        sub = estimate_subspace(t, 64, seed=2)
        # reconstruct the same outer-product matrix trace via the scores
        from tqmc import lowdisc, specfun
        from tqmc.train import derive_seed
        u = lowdisc.rqmc_points(64, 8, derive_seed(2, "subspace")).points
        g = relative_score(t, specfun.norm_icdf(u))
        trace = float(np.sum(g * g) / 64)
        assert sub.eigenvalues.sum() == pytest.approx(trace, rel=1e-8)

    def test_rotation_equivariance_rank_one(self):
        rng = np.random.default_rng(5)
        q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        mu = q[:, 0]
        t = gaussian_target(mu, np.eye(4))
        sub = estimate_subspace(t, 32, seed=7)
        assert abs(sub.v_r[:, 0] @ mu) >= 1 - 1e-8

    def test_orthonormal_full_rotation(self):
        t = logistic_target(make_logistic_synthetic(d=6, n_obs=8, seed=2))
        sub = estimate_subspace(t, 64, seed=4)
        v = sub.v_full
        assert np.max(np.abs(v.T @ v - np.eye(6))) < 1e-10

    def test_mc_kind_and_validation(self):
        t = gaussian_target(np.ones(2), np.eye(2))
        sub = estimate_subspace(t, 64, seed=0, kind="mc")
        assert sub.rank == 1
        with pytest.raises(SubspaceError):
            estimate_subspace(t, 64, seed=0, kind="halton")
        with pytest.raises(SubspaceError):
            estimate_subspace(t, 64, seed=0, threshold=1.5)

    def test_small_sample_warns(self):
        t = gaussian_target(np.ones(5), np.eye(5))
        with pytest.warns(UserWarning, match="below dimension"):
            estimate_subspace(t, 3, seed=0)


class TestSplitMapConfig:
    def _subspace(self, d=50, seed=0):
        t = logistic_target(make_logistic_synthetic(d=d, seed=seed))
        return estimate_subspace(t, 256, seed=seed), t

    def test_parameter_count_matches_formula(self):
        sub, t = self._subspace()
        tmap = split_map_config(sub, 50, n_layers=1,
                                shape_grid=flow.default_shape_grid(7))
        theta = flow.pack_params(tmap)
        assert theta.size == flow.param_count(50, 21, 1, tri_rank=sub.rank)
        if sub.rank == 6:
            assert theta.size == 1165

    def test_full_rank_equals_full_mode_count(self):
        t = gaussian_target(np.ones(3), 0.5 * np.eye(3) + 0.5 * np.ones((3, 3)))
        sub = estimate_subspace(t, 64, seed=1, threshold=1.0)
        tmap = split_map_config(sub, 3, n_layers=2)
        assert flow.pack_params(tmap).size == flow.param_count(
            3, tmap.n_shapes, 2, tri_rank=sub.rank)

    def test_rotation_orthogonality_persisted(self, tmp_path):
        sub, _ = self._subspace(d=10)
        tmap = split_map_config(sub, 10)
        flow.save_model(tmap, tmp_path / "m.json")
        rot = flow.load_model(tmp_path / "m.json").rotation
        assert np.max(np.abs(rot.T @ rot - np.eye(10))) < 1e-8

    def test_degenerate_rank_rejected(self):
        t = gaussian_target(np.zeros(2), np.eye(2))
        sub = estimate_subspace(t, 16, seed=0)
        with pytest.raises(SubspaceError):
            split_map_config(sub, 2)

    def test_subspace_forward_matches_equivalent_full_map(self):
        # a subspace map with identity rotation equals a full map whose
        # trailing off-diagonal entries are zero
        d, r = 4, 2
        rng = np.random.default_rng(9)
        full = flow.identity_map(d, n_layers=1, identity_logit=2.0)
        sub = flow.identity_map(d, n_layers=1, tri_rank=r,
                                rotation=np.eye(d), identity_logit=2.0)
        # shared random parameters on the leading block and diagonals
        diag = 0.3 * rng.standard_normal(d)
        b = rng.standard_normal(d)
        logits = rng.normal(0, 1, size=full.layers[0].logits.shape)
        off_lead = 0.5 * rng.standard_normal(1)  # single entry of 2x2 block
        full.layers[0].raw_diag = diag.copy()
        full.layers[0].b = b.copy()
        full.layers[0].logits = logits.copy()
        full.layers[0].off = np.zeros(d * (d - 1) // 2)
        full.layers[0].off[0] = off_lead[0]  # (1,0) entry is first in tril order
        sub.layers[0].raw_diag = diag.copy()
        sub.layers[0].b = b.copy()
        sub.layers[0].logits = logits.copy()
        sub.layers[0].off = off_lead.copy()
        u = rng.uniform(0.05, 0.95, size=(8, d))
        a, c = flow.forward(full, u), flow.forward(sub, u)
        assert np.allclose(a.x, c.x, atol=1e-12)
        assert np.allclose(a.logdet, c.logdet, atol=1e-12)
