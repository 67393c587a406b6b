"""Relative-score PCA dimension reduction.

The gradient field of log(p/q) with q = N(0, I_d) is sampled, its outer
product matrix eigendecomposed, and the rank picked by the cumulative
eigenvalue-mass rule.  The resulting rotation feeds a split transport map:
fully triangular on the informed leading block, diagonal on the rest.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import flow, linalg, lowdisc, specfun
from .targets import Target
from .train import derive_seed


class SubspaceError(ValueError):
    pass


@dataclass
class SubspaceResult:
    eigenvalues: np.ndarray      # descending, length d
    v_r: np.ndarray              # (d, r) orthonormal
    v_full: np.ndarray           # (d, d), [v_r | completion]
    rank: int
    n_samples: int
    degenerate: bool = False

    @property
    def explained_ratio(self) -> float:
        total = self.eigenvalues.sum()
        if total <= 0:
            return 0.0
        return float(self.eigenvalues[:self.rank].sum() / total)


def relative_score(target: Target, x: np.ndarray) -> np.ndarray:
    """Gradient of log(p(x)/q(x)) with q = N(0, I_d): score(x) + x."""
    x = target.check_point(x)
    return target.score(x) + x


def estimate_subspace(target: Target, n_samples: int, seed: int,
                      kind: str = "rqmc", threshold: float = 0.99) -> SubspaceResult:
    """PCA of relative scores at Gaussian sample points.

    The outer-product matrix is stored divided by the sample count (the
    eigenvectors and mass ratios are scale-invariant; the normalization
    only helps conditioning).
    """
    if not 0.0 < threshold <= 1.0:
        raise SubspaceError("threshold must be in (0, 1]")
    d = target.d
    if n_samples < d:
        warnings.warn(f"subspace sample count {n_samples} below dimension {d}",
                      stacklevel=2)
    if kind == "rqmc":
        n_pow2 = 1 << (n_samples - 1).bit_length()
        u = lowdisc.rqmc_points(n_pow2, d, derive_seed(seed, "subspace")).points[:n_samples]
    elif kind == "mc":
        u = lowdisc.mc_points(n_samples, d, derive_seed(seed, "subspace")).points
    else:
        raise SubspaceError(f"unknown sample kind {kind!r}")
    z = specfun.norm_icdf(u)
    g = relative_score(target, z)
    h = linalg.symmetrize(g.T @ g / n_samples)
    vals, vecs = linalg.sym_eigen(h)
    vals = np.maximum(vals, 0.0)
    if vals.max(initial=0.0) < 1e-14:
        return SubspaceResult(eigenvalues=vals, v_r=np.zeros((d, 0)),
                              v_full=np.eye(d), rank=0, n_samples=n_samples,
                              degenerate=True)
    cum = np.cumsum(vals)
    rank = int(np.searchsorted(cum, threshold * cum[-1] - 1e-15) + 1)
    v_r = vecs[:, :rank]
    v_perp = linalg.gram_schmidt_complete(v_r, vecs[:, rank:])
    v_full = np.column_stack([v_r, v_perp]) if rank < d else v_r
    return SubspaceResult(eigenvalues=vals, v_r=v_r, v_full=v_full,
                          rank=rank, n_samples=n_samples)


def split_map_config(sub: SubspaceResult, d: int, base: str = "gauss",
                     n_layers: int = 1, shape_grid: np.ndarray | None = None,
                     init_logit: float = 6.0) -> flow.TransportMap:
    """Subspace-mode map: triangular on the leading rank block, diagonal
    on the trailing block, with the PCA rotation applied last."""
    if sub.rank < 1:
        raise SubspaceError("degenerate subspace (rank 0); use a full-mode map")
    tmap = flow.identity_map(d, base=base, n_layers=n_layers,
                             shape_grid=shape_grid, tri_rank=sub.rank,
                             rotation=sub.v_full.copy(), identity_logit=init_logit)
    tmap.eigenvalues = sub.eigenvalues.copy()
    return tmap
