"""Shared test helpers: independent numerical oracles."""

from __future__ import annotations

import math

import numpy as np


def fd_grad(f, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = h
        g.flat[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def fd_jacobian(f, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central finite-difference Jacobian of a vector function."""
    x = np.asarray(x, dtype=np.float64)
    f0 = np.asarray(f(x))
    jac = np.zeros((f0.size, x.size))
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = h
        jac[:, i] = (np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * h)
    return jac


def phi_oracle(x: float) -> float:
    """Standard normal CDF via the error function (independent oracle)."""
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def phi_inv_oracle(u: float, tol: float = 1e-13) -> float:
    """Bisection inverse of phi_oracle."""
    lo, hi = -10.0, 10.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if phi_oracle(mid) < u:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def beta_cdf_oracle(x: float, alpha: int, beta: int) -> float:
    """Binomial-sum identity for the regularized incomplete beta function
    with integer shapes: I_x(a, b) = sum_{j=a}^{a+b-1} C(n, j) x^j (1-x)^(n-j)
    with n = a + b - 1."""
    n = alpha + beta - 1
    return sum(math.comb(n, j) * x**j * (1.0 - x) ** (n - j)
               for j in range(alpha, n + 1))


def ks_statistic(sample: np.ndarray) -> float:
    """Kolmogorov-Smirnov statistic against Uniform[0,1]."""
    s = np.sort(np.asarray(sample, dtype=np.float64))
    n = s.size
    grid = np.arange(1, n + 1) / n
    return float(max(np.max(grid - s), np.max(s - (grid - 1.0 / n))))


def dyadic_counts(column: np.ndarray, k: int) -> np.ndarray:
    """Counts of points per dyadic interval of size 2^-k in one coordinate."""
    idx = np.floor(column * 2**k).astype(int)
    return np.bincount(idx, minlength=2**k)
