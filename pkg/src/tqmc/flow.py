"""Transport maps from the unit cube to R^d.

A map is the composition of a coordinatewise base transform (inverse
Gaussian or logistic CDF) with K invertible layers.  Each layer applies a
lower-triangular affine transform followed by per-coordinate monotone
"sandwich" transforms F^-1(Psi_w(F(z))), where Psi_w is a convex
combination of Beta CDFs over a fixed integer shape grid.  The layer
Jacobian is triangular, so the log-determinant accumulates as a sum of
scalar terms; gradients with respect to all parameters are computed by an
analytic reverse sweep.

Constraint reparameterizations keep the parameter vector unconstrained:
triangular diagonals are exp(raw), simplex weights are softmax(logits).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import logsumexp

from . import linalg, specfun
from .specfun import clamp_unit

FORMAT_VERSION = 1

# Base-space window for elementwise inversion; F saturates beyond it.
INVERT_LO = -40.0
INVERT_HI = 40.0


class FlowError(ValueError):
    pass


class FlowEvaluationError(FlowError):
    def __init__(self, message: str, layer: int | None = None):
        super().__init__(message)
        self.layer = layer


class FlowInversionError(FlowError):
    pass


def default_shape_grid(bound: int = 7) -> np.ndarray:
    """Integer Beta shape pairs (alpha, beta) with alpha + beta <= bound.

    Ordered by (alpha + beta, alpha), so the identity pair (1, 1) is first.
    """
    if bound < 2:
        raise FlowError("shape bound must be >= 2")
    pairs = [(a, t - a) for t in range(2, bound + 1) for a in range(1, t)]
    return np.asarray(pairs, dtype=np.int64)


IDENTITY_SHAPE_INDEX = 0  # position of (1, 1) in default_shape_grid output


@dataclass
class FlowLayer:
    """One autoregressive layer: z = T(L x + b).

    ``raw_diag`` holds log-diagonals of L.  ``off`` packs the strictly
    lower-triangular entries of the leading ``tri_rank`` x ``tri_rank``
    block row-major; rows at and beyond tri_rank are diagonal-only.
    ``logits`` (d, S) parametrize per-coordinate simplex weights.
    """

    raw_diag: np.ndarray
    off: np.ndarray
    b: np.ndarray
    logits: np.ndarray

    def copy(self) -> "FlowLayer":
        return FlowLayer(self.raw_diag.copy(), self.off.copy(),
                         self.b.copy(), self.logits.copy())


@dataclass
class TransportMap:
    d: int
    base: str
    shape_grid: np.ndarray
    layers: list[FlowLayer]
    tri_rank: int
    rotation: np.ndarray | None = None
    eigenvalues: np.ndarray | None = None

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def n_shapes(self) -> int:
        return self.shape_grid.shape[0]

    @property
    def mode(self) -> str:
        return "full" if self.tri_rank == self.d else "subspace"

    def copy(self) -> "TransportMap":
        return replace(self, layers=[ly.copy() for ly in self.layers],
                       shape_grid=self.shape_grid.copy(),
                       rotation=None if self.rotation is None else self.rotation.copy())


def _n_off(tri_rank: int) -> int:
    return tri_rank * (tri_rank - 1) // 2


def param_count(d: int, n_shapes: int, n_layers: int, tri_rank: int | None = None) -> int:
    r = d if tri_rank is None else tri_rank
    return n_layers * (d + _n_off(r) + d + d * n_shapes)


def _off_indices(d: int, tri_rank: int) -> tuple[np.ndarray, np.ndarray]:
    rows, cols = np.tril_indices(tri_rank, k=-1)
    return rows, cols


def layer_matrix(layer: FlowLayer, d: int, tri_rank: int) -> np.ndarray:
    L = np.zeros((d, d))
    # overflow to inf is acceptable here: line-search probes may evaluate
    # extreme raw_diag values, and the resulting non-finite objective is
    # rejected by the caller
    with np.errstate(over="ignore"):
        L[np.diag_indices(d)] = np.exp(layer.raw_diag)
    rows, cols = _off_indices(d, tri_rank)
    L[rows, cols] = layer.off
    return L


def identity_map(d: int, base: str = "gauss", n_layers: int = 3,
                 shape_grid: np.ndarray | None = None, tri_rank: int | None = None,
                 rotation: np.ndarray | None = None,
                 identity_logit: float = 60.0) -> TransportMap:
    """Map initialized at (numerically) the base measure pushforward.

    The weight logit of the identity Beta pair (1, 1) is raised so the
    simplex weights put all but ~exp(-identity_logit) mass on identity;
    other logits are zero so every component keeps a live gradient.
    """
    grid = default_shape_grid() if shape_grid is None else np.asarray(shape_grid)
    if not ((grid[:, 0] == 1) & (grid[:, 1] == 1)).any():
        raise FlowError("shape grid must contain the identity pair (1, 1)")
    r = d if tri_rank is None else tri_rank
    S = grid.shape[0]
    layers = []
    for _ in range(n_layers):
        logits = np.zeros((d, S))
        logits[:, IDENTITY_SHAPE_INDEX] = identity_logit
        layers.append(FlowLayer(np.zeros(d), np.zeros(_n_off(r)), np.zeros(d), logits))
    specfun.base_kind(base)  # validate
    return TransportMap(d=d, base=base, shape_grid=grid, layers=layers,
                        tri_rank=r, rotation=rotation)


# ---------------------------------------------------------------------------
# Elementwise sandwich transform
# ---------------------------------------------------------------------------

def _log_softmax(logits: np.ndarray) -> np.ndarray:
    return logits - logsumexp(logits, axis=-1, keepdims=True)


def _sandwich(base: specfun.BaseKind, grid: np.ndarray, logw: np.ndarray,
              y: np.ndarray):
    """Evaluate z = T(y) and log T'(y) with intermediates for the backward pass.

    ``y`` has shape (n, d); ``logw`` has shape (d, S) (log simplex weights).
    Returns a dict of arrays.
    """
    alpha = grid[:, 0].astype(np.float64)
    beta = grid[:, 1].astype(np.float64)
    t = clamp_unit(base.cdf(y))
    with np.errstate(divide="ignore"):
        log_b = ((alpha - 1.0) * np.log(t)[..., None]
                 + (beta - 1.0) * np.log1p(-t)[..., None]
                 - specfun.log_gamma(alpha) - specfun.log_gamma(beta)
                 + specfun.log_gamma(alpha + beta))
    log_psi = logsumexp(logw[None, :, :] + log_b, axis=-1)
    B = specfun.beta_cdf(t[..., None], alpha, beta)
    w = np.exp(logw)
    psi_big = np.einsum("nds,ds->nd", B, w)
    z = base.icdf(clamp_unit(psi_big))
    logpdf_y = base.logpdf(y)
    logpdf_z = base.logpdf(z)
    log_tdot = log_psi + logpdf_y - logpdf_z
    return {
        "t": t, "log_b": log_b, "log_psi": log_psi, "B": B, "w": w,
        "z": z, "logpdf_y": logpdf_y, "logpdf_z": logpdf_z,
        "log_tdot": log_tdot, "alpha": alpha, "beta": beta, "y": y,
    }


def elementwise_forward(base: specfun.BaseKind, grid: np.ndarray,
                        logits: np.ndarray, z: np.ndarray | float):
    """Scalar/vector sandwich transform for one coordinate.

    ``logits`` has shape (S,).  Returns (value, log_derivative).
    """
    y = np.atleast_1d(np.asarray(z, dtype=np.float64))[:, None]  # (n, 1)
    logw = _log_softmax(np.asarray(logits, dtype=np.float64))[None, :]
    c = _sandwich(base, grid, logw, y)
    val, ld = c["z"][:, 0], c["log_tdot"][:, 0]
    if np.isscalar(z) or np.asarray(z).ndim == 0:
        return float(val[0]), float(ld[0])
    return val, ld


# ---------------------------------------------------------------------------
# Forward evaluation
# ---------------------------------------------------------------------------

@dataclass
class ForwardRecord:
    u: np.ndarray
    x: np.ndarray            # final output, rotation applied
    logdet: np.ndarray       # (n,)
    intermediates: list[np.ndarray] = field(default_factory=list)  # x^0 .. x^K
    caches: list[dict] | None = field(default=None, repr=False)


def forward(tmap: TransportMap, u: np.ndarray, keep_cache: bool = False) -> ForwardRecord:
    """Push points through the map, accumulating the exact log-determinant."""
    base = specfun.base_kind(tmap.base)
    u = np.atleast_2d(np.asarray(u, dtype=np.float64))
    if u.shape[1] != tmap.d:
        raise FlowEvaluationError(f"points have dimension {u.shape[1]}, map has {tmap.d}")
    uc = clamp_unit(u)
    x = base.icdf(uc)
    logdet = -base.logpdf(x).sum(axis=1)
    inters = [x]
    caches: list[dict] = []
    for k, layer in enumerate(tmap.layers):
        L = layer_matrix(layer, tmap.d, tmap.tri_rank)
        y = x @ L.T + layer.b
        logw = _log_softmax(layer.logits)
        c = _sandwich(base, tmap.shape_grid, logw, y)
        z = c["z"]
        if not np.all(np.isfinite(z)):
            raise FlowEvaluationError(f"non-finite value in layer {k}", layer=k)
        logdet = logdet + c["log_tdot"].sum(axis=1) + layer.raw_diag.sum()
        if keep_cache:
            c["x_in"] = x
            c["L"] = L
            c["logw"] = logw
            caches.append(c)
        x = z
        inters.append(x)
    if not np.all(np.isfinite(logdet)):
        raise FlowEvaluationError("non-finite log-determinant")
    x_out = x if tmap.rotation is None else x @ tmap.rotation.T
    return ForwardRecord(u=u, x=x_out, logdet=logdet, intermediates=inters,
                         caches=caches if keep_cache else None)


# ---------------------------------------------------------------------------
# Parameter packing
# ---------------------------------------------------------------------------

def pack_params(tmap: TransportMap) -> np.ndarray:
    parts = []
    for layer in tmap.layers:
        parts.extend([layer.raw_diag, layer.off, layer.b, layer.logits.ravel()])
    theta = np.concatenate(parts) if parts else np.zeros(0)
    expected = param_count(tmap.d, tmap.n_shapes, tmap.n_layers, tmap.tri_rank)
    assert theta.size == expected
    return theta


def unpack_params(tmap: TransportMap, theta: np.ndarray) -> TransportMap:
    """Return a new map with parameters taken from the flat vector theta."""
    d, S, r = tmap.d, tmap.n_shapes, tmap.tri_rank
    expected = param_count(d, S, tmap.n_layers, r)
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (expected,):
        raise FlowError(f"expected parameter vector of length {expected}, got {theta.shape}")
    out = tmap.copy()
    pos = 0
    for layer in out.layers:
        for name, size, shape in (("raw_diag", d, (d,)), ("off", _n_off(r), (_n_off(r),)),
                                  ("b", d, (d,)), ("logits", d * S, (d, S))):
            setattr(layer, name, theta[pos:pos + size].reshape(shape).copy())
            pos += size
    return out


# ---------------------------------------------------------------------------
# Reverse-sweep gradient
# ---------------------------------------------------------------------------

def forward_grad(tmap: TransportMap, u: np.ndarray, v_x: np.ndarray | None,
                 v_logdet: float = 0.0) -> tuple[ForwardRecord, np.ndarray]:
    """Gradient of sum_i v_x[i] . x_i + v_logdet * sum_i logdet_i w.r.t. theta.

    ``v_x`` is an (n, d) adjoint on the map output (None for zero); the
    caller assembles objectives such as the KL integrand by choosing the
    adjoints.  Returns the forward record and the packed gradient.
    """
    base = specfun.base_kind(tmap.base)
    rec = forward(tmap, u, keep_cache=True)
    n = rec.u.shape[0]
    c_ld = float(v_logdet)
    if v_x is None:
        g = np.zeros((n, tmap.d))
    else:
        v_x = np.asarray(v_x, dtype=np.float64)
        g = v_x if tmap.rotation is None else v_x @ tmap.rotation
    grads = [None] * tmap.n_layers
    rows, cols = _off_indices(tmap.d, tmap.tri_rank)
    for k in range(tmap.n_layers - 1, -1, -1):
        layer = tmap.layers[k]
        c = rec.caches[k]
        t, z, y = c["t"], c["z"], c["y"]
        alpha, beta = c["alpha"], c["beta"]
        tdot = np.exp(c["log_tdot"])
        dlogpdf_y = base.dlogpdf(y)
        dlogpdf_z = base.dlogpdf(z)
        f_y = np.exp(c["logpdf_y"])
        inv_f_z = np.exp(-c["logpdf_z"])
        # contributions of each beta component to psi, summing to 1
        r_s = np.exp(c["logw"][None, :, :] + c["log_b"] - c["log_psi"][..., None])
        with np.errstate(divide="ignore", invalid="ignore"):
            dlog_b_dt = (alpha - 1.0) / t[..., None] - (beta - 1.0) / (1.0 - t)[..., None]
        dlogpsi_dt = np.einsum("nds,nds->nd", r_s, dlog_b_dt)
        dlogtdot_dy = dlogpsi_dt * f_y + dlogpdf_y - dlogpdf_z * tdot
        gy = g * tdot + c_ld * dlogtdot_dy
        # weight-space gradient, then softmax chain to logits
        dz_dw = c["B"] * inv_f_z[..., None]
        dlogtdot_dw = np.exp(c["log_b"] - c["log_psi"][..., None]) - dlogpdf_z[..., None] * dz_dw
        a = np.einsum("nd,nds->ds", g, dz_dw) + c_ld * dlogtdot_dw.sum(axis=0)
        w = np.exp(c["logw"])
        grad_logits = w * (a - (w * a).sum(axis=1, keepdims=True))
        grad_b = gy.sum(axis=0)
        GL = gy.T @ c["x_in"]
        grad_off = GL[rows, cols]
        grad_raw = np.diag(GL) * np.exp(layer.raw_diag) + c_ld * n
        grads[k] = (grad_raw, grad_off, grad_b, grad_logits)
        g = gy @ c["L"]
    parts = []
    for gr in grads:
        parts.extend([gr[0], gr[1], gr[2], gr[3].ravel()])
    return rec, np.concatenate(parts) if parts else np.zeros(0)


# ---------------------------------------------------------------------------
# Inversion
# ---------------------------------------------------------------------------

def inverse(tmap: TransportMap, x: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Map points from R^d back to the unit cube; layers inverted backward.

    Each elementwise transform is inverted by bisection on the base-space
    window [INVERT_LO, INVERT_HI]; the affine part by triangular solve.
    """
    base = specfun.base_kind(tmap.base)
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if tmap.rotation is not None:
        x = x @ tmap.rotation
    for layer in reversed(tmap.layers):
        L = layer_matrix(layer, tmap.d, tmap.tri_rank)
        logw = _log_softmax(layer.logits)

        def t_of(yv):
            return _sandwich(base, tmap.shape_grid, logw, yv)["z"]

        lo = np.full_like(x, INVERT_LO)
        hi = np.full_like(x, INVERT_HI)
        if np.any(t_of(lo) > x) or np.any(t_of(hi) < x):
            raise FlowInversionError("target outside invertible range of elementwise map")
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            too_low = t_of(mid) < x
            lo = np.where(too_low, mid, lo)
            hi = np.where(too_low, hi, mid)
        y = 0.5 * (lo + hi)
        x = linalg.tri_solve(L, y - layer.b)
    return np.clip(base.cdf(x), specfun.EPS, 1.0 - specfun.EPS)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def to_json_dict(tmap: TransportMap) -> dict:
    doc = {
        "format_version": FORMAT_VERSION,
        "d": tmap.d,
        "base": tmap.base,
        "K": tmap.n_layers,
        "S": tmap.n_shapes,
        "shape_grid": tmap.shape_grid.tolist(),
        "mode": tmap.mode,
        "r": tmap.tri_rank,
        "layers": [
            {
                "raw_diag": ly.raw_diag.tolist(),
                "lower_offdiag": ly.off.tolist(),
                "b": ly.b.tolist(),
                "weight_logits": ly.logits.tolist(),
            }
            for ly in tmap.layers
        ],
    }
    if tmap.rotation is not None:
        doc["rotation"] = tmap.rotation.ravel().tolist()
    if tmap.eigenvalues is not None:
        doc["eigenvalues"] = np.asarray(tmap.eigenvalues).tolist()
    return doc


def from_json_dict(doc: dict) -> TransportMap:
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise FlowError(f"unsupported model format_version {version!r}")
    d = int(doc["d"])
    grid = np.asarray(doc["shape_grid"], dtype=np.int64)
    layers = [
        FlowLayer(
            np.asarray(ly["raw_diag"], dtype=np.float64),
            np.asarray(ly["lower_offdiag"], dtype=np.float64),
            np.asarray(ly["b"], dtype=np.float64),
            np.asarray(ly["weight_logits"], dtype=np.float64),
        )
        for ly in doc["layers"]
    ]
    rotation = None
    if "rotation" in doc:
        rotation = np.asarray(doc["rotation"], dtype=np.float64).reshape(d, d)
    eig = None
    if "eigenvalues" in doc:
        eig = np.asarray(doc["eigenvalues"], dtype=np.float64)
    return TransportMap(d=d, base=doc["base"], shape_grid=grid, layers=layers,
                        tri_rank=int(doc["r"]), rotation=rotation, eigenvalues=eig)


def save_model(tmap: TransportMap, path) -> None:
    with open(path, "w") as fh:
        json.dump(to_json_dict(tmap), fh, indent=1)


def load_model(path) -> TransportMap:
    with open(path) as fh:
        return from_json_dict(json.load(fh))
