"""Scalar special functions with documented accuracy.

Backed by scipy.special (AS-241-grade normal quantile, Lanczos log-gamma,
continued-fraction regularized incomplete beta).  All densities are also
exposed in log form; layered Jacobians must be accumulated in the log
domain, never as products of densities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sp

# Clamp window: the exact dyadic 0 produced by a raw net's index-0 point
# must never reach an inverse-CDF asymptote.
EPS = 2.0**-53
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class DomainError(ValueError):
    """Argument outside the documented domain."""


def clamp_unit(u):
    """Clamp values into [EPS, 1 - EPS]."""
    return np.clip(u, EPS, 1.0 - EPS)


def norm_cdf(x):
    return sp.ndtr(x)


def norm_icdf(u):
    u = clamp_unit(np.asarray(u, dtype=np.float64))
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise DomainError("norm_icdf argument outside (0, 1)")
    return sp.ndtri(u)


def norm_logpdf(x):
    x = np.asarray(x, dtype=np.float64)
    return -0.5 * x * x - _LOG_SQRT_2PI


def sigmoid(x):
    """Overflow-safe logistic CDF."""
    return sp.expit(x)


def logit(u):
    u = np.asarray(u, dtype=np.float64)
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise DomainError("logit argument outside (0, 1)")
    return sp.logit(u)


def logistic_logpdf(x):
    x = np.asarray(x, dtype=np.float64)
    # log[e^-x / (1+e^-x)^2] = -x - 2 log(1+e^-x), written symmetrically
    ax = np.abs(x)
    return -ax - 2.0 * np.log1p(np.exp(-ax))


def log_sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    return np.where(x > 0, -np.log1p(np.exp(-np.abs(x))),
                    x - np.log1p(np.exp(-np.abs(x))))


def log_gamma(x):
    x = np.asarray(x, dtype=np.float64)
    if np.any(x <= 0.0):
        raise DomainError("log_gamma requires x > 0")
    return sp.gammaln(x)


def log_beta(alpha: float, beta: float) -> float:
    return float(sp.betaln(alpha, beta))


def beta_cdf(x, alpha, beta):
    """Regularized incomplete beta I_x(alpha, beta); x clamped to [0, 1]."""
    if np.any(np.asarray(alpha) <= 0) or np.any(np.asarray(beta) <= 0):
        raise DomainError("beta shapes must be positive")
    x = np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)
    return sp.betainc(alpha, beta, x)


def beta_pdf(x, alpha, beta):
    return np.exp(log_beta_pdf(x, alpha, beta))


def log_beta_pdf(x, alpha, beta):
    if np.any(np.asarray(alpha) <= 0) or np.any(np.asarray(beta) <= 0):
        raise DomainError("beta shapes must be positive")
    x = np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = ((alpha - 1.0) * np.log(x) + (beta - 1.0) * np.log1p(-x)
               - sp.betaln(alpha, beta))
    # 0 * log(0) conventions at the endpoints for shape 1
    out = np.where(np.isnan(out), -np.inf, out)
    return out


@dataclass(frozen=True)
class BaseKind:
    """A symmetric log-concave base distribution: F, F^-1, log f, (log f)'."""

    name: str

    def cdf(self, x):
        return norm_cdf(x) if self.name == "gauss" else sigmoid(x)

    def icdf(self, u):
        return norm_icdf(u) if self.name == "gauss" else logit(clamp_unit(u))

    def logpdf(self, x):
        return norm_logpdf(x) if self.name == "gauss" else logistic_logpdf(x)

    def dlogpdf(self, x):
        """d/dx log f(x)."""
        x = np.asarray(x, dtype=np.float64)
        if self.name == "gauss":
            return -x
        return 1.0 - 2.0 * sigmoid(x)


GAUSS = BaseKind("gauss")
LOGISTIC = BaseKind("logistic")
_BASES = {"gauss": GAUSS, "logistic": LOGISTIC}


def base_kind(name: str) -> BaseKind:
    try:
        return _BASES[name]
    except KeyError:
        raise DomainError(f"unknown base kind {name!r}") from None
