"""Target distributions: unnormalized log-density, score, optional Hessian.

All built-in targets evaluate in batch: ``log_density`` maps (n, d) to
(n,) and ``score`` maps (n, d) to (n, d).  ``hessian`` takes a single
point.  Downstream estimators treat every target as unnormalized and use
self-normalized importance weighting unless ``normalized`` is set.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import linalg
from .specfun import log_sigmoid, sigmoid

_LOG_2PI = math.log(2.0 * math.pi)


class TargetError(ValueError):
    pass


@dataclass
class Target:
    d: int
    log_density: Callable[[np.ndarray], np.ndarray]
    score: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray] | None = None
    normalized: bool = False
    true_mean: np.ndarray | None = None
    true_second_moment: np.ndarray | None = None
    name: str = "target"

    def check_point(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.d:
            raise TargetError(f"point dimension {x.shape[1]} != target dimension {self.d}")
        return x


def gaussian_target(mu: np.ndarray, sigma: np.ndarray) -> Target:
    """Multivariate normal N(mu, sigma); normalized, analytic moments."""
    mu = np.asarray(mu, dtype=np.float64)
    d = mu.shape[0]
    sigma = linalg.symmetrize(np.asarray(sigma, dtype=np.float64))
    chol = linalg.cholesky(sigma)  # raises on non-PD
    logdet = 2.0 * np.log(np.diag(chol)).sum()
    prec = np.linalg.inv(sigma)
    const = -0.5 * (d * _LOG_2PI + logdet)

    def log_density(x):
        dx = np.atleast_2d(x) - mu
        return const - 0.5 * np.einsum("ni,ij,nj->n", dx, prec, dx)

    def score(x):
        dx = np.atleast_2d(x) - mu
        return -dx @ prec

    def hessian(x):
        return -prec

    return Target(d=d, log_density=log_density, score=score, hessian=hessian,
                  normalized=True, true_mean=mu.copy(),
                  true_second_moment=np.diag(sigma) + mu**2, name="gaussian")


def banana_target() -> Target:
    """2-d banana: pushforward of N(0, I_2) under (z1, z1^2 - 1 + z2/sqrt(2))."""
    sqrt2 = math.sqrt(2.0)

    def log_density(x):
        x = np.atleast_2d(x)
        g = sqrt2 * (x[:, 1] - x[:, 0] ** 2 + 1.0)
        return (-0.5 * x[:, 0] ** 2 - 0.5 * g**2 + 0.5 * math.log(2.0) - _LOG_2PI)

    def score(x):
        x = np.atleast_2d(x)
        g = sqrt2 * (x[:, 1] - x[:, 0] ** 2 + 1.0)
        return np.column_stack([-x[:, 0] + 2.0 * sqrt2 * x[:, 0] * g, -sqrt2 * g])

    def hessian(x):
        x = np.atleast_1d(np.asarray(x, dtype=np.float64)).ravel()
        g = sqrt2 * (x[1] - x[0] ** 2 + 1.0)
        h11 = -1.0 + 2.0 * sqrt2 * g - 8.0 * x[0] ** 2
        h12 = 4.0 * x[0]
        return np.array([[h11, h12], [h12, -2.0]])

    return Target(d=2, log_density=log_density, score=score, hessian=hessian,
                  normalized=True, true_mean=np.array([0.0, 0.0]),
                  true_second_moment=np.array([1.0, 2.5]), name="banana")


@dataclass
class LogisticData:
    X: np.ndarray
    y: np.ndarray
    prior_var: float = 1.0

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=np.float64))
        self.y = np.asarray(self.y, dtype=np.float64).ravel()
        if self.X.shape[0] != self.y.shape[0]:
            raise TargetError("X and y row counts differ")
        if not np.isin(self.y, (0.0, 1.0)).all():
            raise TargetError("labels must be 0 or 1")
        if self.prior_var <= 0:
            raise TargetError("prior variance must be positive")

    @property
    def n_obs(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


def logistic_target(data: LogisticData) -> Target:
    """Bayesian logistic-regression posterior with N(0, prior_var I) prior."""
    X, y, s2 = data.X, data.y, data.prior_var
    d = data.d

    def log_density(beta):
        beta = np.atleast_2d(beta)
        a = beta @ X.T  # (n, N)
        loglik = (y * a + log_sigmoid(-a)).sum(axis=1)
        return loglik - (beta**2).sum(axis=1) / (2.0 * s2)

    def score(beta):
        beta = np.atleast_2d(beta)
        s = sigmoid(beta @ X.T)
        return (y - s) @ X - beta / s2

    def hessian(beta):
        beta = np.atleast_1d(np.asarray(beta, dtype=np.float64)).ravel()
        s = sigmoid(X @ beta)
        return -(X.T * (s * (1.0 - s))) @ X - np.eye(d) / s2

    return Target(d=d, log_density=log_density, score=score, hessian=hessian,
                  normalized=False, name="logistic")


def make_logistic_synthetic(d: int = 50, n_obs: int = 20, seed: int = 0,
                            prior_var: float = 1.0) -> LogisticData:
    """Covariates from N(0, Sigma/N) with Sigma_ij = 0.9^|i-j|; labels from
    a Bernoulli model with coefficients uniform on [-1, 1]."""
    rng = np.random.default_rng(seed)
    idx = np.arange(d)
    sigma = 0.9 ** np.abs(idx[:, None] - idx[None, :])
    chol = linalg.cholesky(sigma / n_obs)
    X = rng.standard_normal((n_obs, d)) @ chol.T
    beta0 = rng.uniform(-1.0, 1.0, size=d)
    y = (rng.random(n_obs) < sigmoid(X @ beta0)).astype(np.float64)
    return LogisticData(X=X, y=y, prior_var=prior_var)


def load_logistic_csv(path, prior_var: float = 1.0) -> LogisticData:
    """Read rows "y,x1,...,xd" with a mandatory header line."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[0].strip() != "y":
            raise TargetError("expected header 'y,x1,...,xd'")
        for i, row in enumerate(reader, start=1):
            try:
                vals = [float(v) for v in row]
            except ValueError as exc:
                raise TargetError(f"row {i}: non-numeric value") from exc
            if vals and vals[0] not in (0.0, 1.0):
                raise TargetError(f"row {i}: label must be 0 or 1")
            rows.append(vals)
    if not rows:
        raise TargetError("no data rows")
    arr = np.asarray(rows, dtype=np.float64)
    return LogisticData(X=arr[:, 1:], y=arr[:, 0], prior_var=prior_var)


def write_logistic_csv(path, data: LogisticData) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["y"] + [f"x{j + 1}" for j in range(data.d)])
        for yi, xi in zip(data.y, data.X):
            writer.writerow([int(yi)] + [repr(float(v)) for v in xi])
