"""Special functions and base-distribution kinds."""

import numpy as np
import pytest

from conftest import beta_cdf_oracle, phi_inv_oracle
from tqmc import specfun
from tqmc.flow import default_shape_grid
from tqmc.specfun import (
    EPS,
    GAUSS,
    LOGISTIC,
    base_kind,
    beta_cdf,
    beta_pdf,
    clamp_unit,
    log_gamma,
    logit,
    norm_cdf,
    norm_icdf,
    sigmoid,
)


class TestNormICDF:
    def test_median_is_zero(self):
        assert norm_icdf(0.5) == 0.0

    def test_upper_quantile_vs_bisection_oracle(self):
        assert abs(norm_icdf(0.975) - phi_inv_oracle(0.975)) < 1e-5
        assert abs(norm_icdf(0.975) - 1.959964) < 1e-5

    def test_roundtrip_on_dense_grid(self):
        u = np.linspace(1e-6, 1 - 1e-6, 10**5)
        assert np.max(np.abs(norm_cdf(norm_icdf(u)) - u)) < 1e-9


class TestSigmoidLogit:
    def test_logit_of_half_is_zero(self):
        assert logit(0.5) == 0.0

    def test_sigmoid_saturation_no_overflow(self):
        v = sigmoid(-1000.0)
        # e^-1000 underflows double precision; the contract is saturation
        # without overflow, not a representable positive value
        assert 0.0 <= v < 1e-300
        assert np.isfinite(v)

    def test_roundtrip(self):
        assert abs(logit(sigmoid(3.7)) - 3.7) < 1e-12


class TestBetaCDF:
    def test_uniform_shape_is_identity(self):
        x = np.linspace(0, 1, 11)
        assert np.allclose(beta_cdf(x, 1, 1), x, atol=0)

    def test_symmetric_shape_median(self):
        assert beta_cdf(0.5, 2, 2) == pytest.approx(0.5, abs=1e-12)

    def test_against_binomial_sum_oracle(self):
        assert beta_cdf(0.3, 2, 5) == pytest.approx(0.579825, abs=1e-6)
        assert beta_cdf(0.3, 2, 5) == pytest.approx(beta_cdf_oracle(0.3, 2, 5),
                                                    abs=1e-9)

    def test_all_integer_shapes_up_to_bound(self):
        xs = np.linspace(0.05, 0.95, 19)
        for alpha in range(1, 10):
            for beta in range(1, 11 - alpha):
                for x in xs:
                    assert beta_cdf(x, alpha, beta) == pytest.approx(
                        beta_cdf_oracle(float(x), alpha, beta), abs=1e-6)

    def test_pdf_matches_cdf_derivative(self):
        rng = np.random.default_rng(0)
        h = 1e-6
        for alpha, beta in default_shape_grid(7):
            x = rng.uniform(0.05, 0.95, size=20)
            fd = (beta_cdf(x + h, alpha, beta) - beta_cdf(x - h, alpha, beta)) / (2 * h)
            assert np.max(np.abs(beta_pdf(x, alpha, beta) - fd)) < 1e-6


class TestLogGamma:
    def test_at_one(self):
        assert log_gamma(1.0) == 0.0

    def test_at_half_closed_form(self):
        assert log_gamma(0.5) == pytest.approx(0.5 * np.log(np.pi), abs=1e-9)
        assert log_gamma(0.5) == pytest.approx(0.572365, abs=1e-6)

    @pytest.mark.parametrize("x", [0.3, 2.7, 41.0])
    def test_recurrence(self, x):
        assert log_gamma(x + 1) - log_gamma(x) - np.log(x) == pytest.approx(0, abs=1e-9)


class TestClampUnit:
    def test_endpoints_pulled_inside(self):
        assert clamp_unit(0.0) == EPS
        assert clamp_unit(1.0) == 1.0 - EPS

    def test_interior_untouched(self):
        u = np.array([0.25, 0.5, 0.75])
        assert np.array_equal(clamp_unit(u), u)


@pytest.mark.parametrize("base", [GAUSS, LOGISTIC])
class TestBaseKind:
    def test_cdf_icdf_roundtrip(self, base):
        u = np.linspace(1e-10, 1 - 1e-10, 10**4)
        assert np.max(np.abs(base.cdf(base.icdf(u)) - u)) < 1e-9

    def test_symmetry(self, base):
        x = np.linspace(-8, 8, 1001)
        assert np.max(np.abs(base.cdf(x) + base.cdf(-x) - 1.0)) < 1e-12

    def test_log_cdf_concavity(self, base):
        x = np.linspace(-30, 30, 601)
        logf = np.log(np.clip(base.cdf(x), 1e-300, None))
        second = logf[:-2] - 2 * logf[1:-1] + logf[2:]
        assert np.all(second <= 1e-10)

    def test_logpdf_matches_pdf_of_cdf_derivative(self, base):
        x = np.linspace(-5, 5, 41)
        h = 1e-6
        fd = (base.cdf(x + h) - base.cdf(x - h)) / (2 * h)
        assert np.max(np.abs(np.exp(base.logpdf(x)) - fd)) < 1e-8

    def test_dlogpdf_matches_fd(self, base):
        x = np.linspace(-5, 5, 41)
        h = 1e-6
        fd = (base.logpdf(x + h) - base.logpdf(x - h)) / (2 * h)
        assert np.max(np.abs(base.dlogpdf(x) - fd)) < 1e-7


def test_base_kind_lookup():
    assert base_kind("gauss") is GAUSS
    assert base_kind("logistic") is LOGISTIC
    with pytest.raises(specfun.DomainError):
        base_kind("cauchy")
