"""Importance-sampling estimators, diagnostics, and the MSE benchmark.

Proposals map cube points to samples together with their log proposal
density: transport maps (log q = -logdet by the change of variables),
Gaussians x = mu + A Phi^-1(u), and the prior special case.  Weights are
always stabilized by max-log subtraction before exponentiation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import flow, linalg, lowdisc, specfun, train
from .lowdisc import PointSet
from .targets import Target
from .train import FitConfig, derive_seed

CSV_MAGIC = "# tqmc-bench v1"
RAW_COLUMNS = ["method", "proposal", "kind", "n", "replicate", "f_id", "estimate", "abs_error"]
SUMMARY_COLUMNS = ["method", "proposal", "n", "f_id", "mse", "ess_mean", "slope"]

_LOG_2PI = math.log(2.0 * math.pi)


class EstimateError(RuntimeError):
    pass


class Proposal:
    """Sampler u in [0,1)^d -> (x, log q(x))."""

    name = "proposal"
    d: int

    def sample(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError


class MapProposal(Proposal):
    """Pushforward of the cube by a transport map; log q = -logdet."""

    def __init__(self, tmap: flow.TransportMap, name: str = "tqmc"):
        self.tmap = tmap
        self.d = tmap.d
        self.name = name

    def sample(self, u):
        rec = flow.forward(self.tmap, u)
        return rec.x, -rec.logdet


class GaussianProposal(Proposal):
    """N(mu, A A^T) sampled as x = mu + A Phi^-1(u)."""

    def __init__(self, mu: np.ndarray, factor: np.ndarray, name: str = "gaussian"):
        self.mu = np.asarray(mu, dtype=np.float64)
        self.factor = np.asarray(factor, dtype=np.float64)
        self.d = self.mu.shape[0]
        self.name = name
        sign, logabsdet = np.linalg.slogdet(self.factor)
        if sign <= 0:
            raise EstimateError("proposal factor must have positive determinant")
        self._log_norm = -0.5 * self.d * _LOG_2PI - logabsdet
        self._inv_factor = np.linalg.inv(self.factor)

    def sample(self, u):
        z = specfun.norm_icdf(specfun.clamp_unit(u))
        x = self.mu + z @ self.factor.T
        logq = self._log_norm - 0.5 * (z**2).sum(axis=1)
        return x, logq

    def log_density(self, x):
        z = (np.atleast_2d(x) - self.mu) @ self._inv_factor.T
        return self._log_norm - 0.5 * (z**2).sum(axis=1)


def prior_proposal(d: int, prior_var: float = 1.0) -> GaussianProposal:
    return GaussianProposal(np.zeros(d), math.sqrt(prior_var) * np.eye(d), name="prior")


class ExactBananaProposal(Proposal):
    """Closed-form banana pushforward (z1, z1^2 - 1 + z2/sqrt(2)); exact."""

    name = "banana-exact"
    d = 2

    def sample(self, u):
        z = specfun.norm_icdf(specfun.clamp_unit(u))
        x = np.column_stack([z[:, 0], z[:, 0] ** 2 - 1.0 + z[:, 1] / math.sqrt(2.0)])
        logq = (specfun.norm_logpdf(z[:, 0]) + specfun.norm_logpdf(z[:, 1])
                + 0.5 * math.log(2.0))
        return x, logq


@dataclass
class FunctionList:
    """Named scalar test functions evaluated in batch: (n, d) -> (n, F)."""

    labels: list[str]
    evaluate: "callable"


def moments_f_list(d: int) -> FunctionList:
    """The default integrands x_j and x_j^2 for every coordinate."""
    labels = [f"x{j + 1}" for j in range(d)] + [f"x{j + 1}^2" for j in range(d)]
    return FunctionList(labels=labels, evaluate=lambda x: np.hstack([x, x**2]))


def moments_ground_truth(target: Target) -> np.ndarray:
    if target.true_mean is None or target.true_second_moment is None:
        raise EstimateError("target has no declared ground-truth moments")
    return np.concatenate([target.true_mean, target.true_second_moment])


def log_weight(proposal: Proposal, target: Target, u: np.ndarray):
    """Sample through the proposal and return (x, log p(x) - log q(x))."""
    x, logq = proposal.sample(u)
    logp = target.log_density(x)
    lw = logp - logq
    if not np.all(np.isfinite(lw)):
        raise EstimateError("non-finite log weight")
    return x, lw


def ess(weights: np.ndarray) -> float:
    """(sum w)^2 / sum w^2 for nonnegative, not-all-zero weights."""
    w = np.asarray(weights, dtype=np.float64)
    if np.any(w < 0):
        raise EstimateError("weights must be nonnegative")
    total = w.sum()
    if total <= 0:
        raise EstimateError("all weights are zero")
    # mathematically ESS <= n; rounding can push the ratio a few ulps over
    return float(min(total**2 / (w**2).sum(), w.size))


def ess_from_log(log_w: np.ndarray) -> float:
    lw = np.asarray(log_w) - np.max(log_w)
    return ess(np.exp(lw))


def snis_estimate(proposal: Proposal, target: Target, fs: FunctionList,
                  ps: PointSet, chunk: int = 8192):
    """Self-normalized importance-sampling estimates for every function.

    Returns (estimates (F,), diagnostics dict with 'ess' and 'max_log_weight').
    """
    lws = []
    fvals = []
    for lo in range(0, ps.n, chunk):
        x, lw = log_weight(proposal, target, ps.points[lo:lo + chunk])
        lws.append(lw)
        fvals.append(fs.evaluate(x))
    lw = np.concatenate(lws)
    fv = np.vstack(fvals)
    m = np.max(lw)
    w = np.exp(lw - m)
    wsum = w.sum()
    if wsum <= 0:
        raise EstimateError("all weights vanished after stabilization")
    est = (w[:, None] * fv).sum(axis=0) / wsum
    diag = {"ess": ess(w), "max_log_weight": float(m)}
    return est, diag


def is_estimate(proposal: Proposal, target: Target, fs: FunctionList,
                ps: PointSet, chunk: int = 8192):
    """Unbiased importance-sampling mean; requires a normalized target."""
    if not target.normalized:
        raise EstimateError("target is unnormalized; use snis_estimate instead")
    ests = []
    wmeans = []
    for lo in range(0, ps.n, chunk):
        x, lw = log_weight(proposal, target, ps.points[lo:lo + chunk])
        w = np.exp(lw)
        ests.append((w[:, None] * fs.evaluate(x)).sum(axis=0))
        wmeans.append(w.sum())
    est = np.sum(ests, axis=0) / ps.n
    return est, {"weight_mean": float(np.sum(wmeans) / ps.n)}


def laplace_proposal(target: Target, max_iter: int = 500) -> GaussianProposal:
    """Gaussian at the mode with covariance from the negated Hessian."""
    if target.hessian is None:
        raise EstimateError("target exposes no Hessian")

    def objective(beta):
        b = beta[None, :]
        return -float(target.log_density(b)[0]), -target.score(b)[0]

    theta, _, _ = train.lbfgs_minimize(objective, np.zeros(target.d),
                                       max_iter=max_iter, grad_tol=1e-8)
    h = -target.hessian(theta)
    chol = linalg.cholesky(h)  # raises if not PD at the mode
    # factor A with A A^T = h^-1: A = L^-T for h = L L^T
    a = np.linalg.solve(chol.T, np.eye(target.d))
    return GaussianProposal(theta, a, name="laplace")


def mfg_proposal(target: Target, config: FitConfig | None = None,
                 seed: int = 0) -> MapProposal:
    """Mean-field Gaussian: a one-layer diagonal map with identity
    elementwise transforms, trained by the usual reverse-KL fit."""
    cfg = config or FitConfig()
    template = flow.identity_map(target.d, base="gauss", n_layers=1,
                                 shape_grid=np.array([[1, 1]]), tri_rank=0)
    mask_cfg = FitConfig(n_train=cfg.n_train, n_layers=1, restarts=cfg.restarts,
                         max_iter=cfg.max_iter, memory=cfg.memory,
                         grad_tol=cfg.grad_tol, jitter=0.0)
    result = train.fit(target, mask_cfg, seed, template=template)
    return MapProposal(result.map, name="mfg")


def mfg_gaussian(proposal: MapProposal) -> tuple[np.ndarray, np.ndarray]:
    """Mean and standard deviations implied by a mean-field map."""
    layer = proposal.tmap.layers[0]
    return layer.b.copy(), np.exp(layer.raw_diag)


# ---------------------------------------------------------------------------
# Replicated MSE benchmark
# ---------------------------------------------------------------------------

@dataclass
class MethodSpec:
    name: str
    proposal: Proposal
    kind: str                     # mc | rqmc

    def __post_init__(self):
        if self.kind not in ("mc", "rqmc"):
            raise EstimateError(f"unknown point kind {self.kind!r}")


@dataclass
class EstimateReport:
    f_labels: list[str]
    ground_truth: np.ndarray
    n_grid: list[int]
    replicates: int
    # raw[(method, n)] -> (R, F) estimates; ess_raw[(method, n)] -> (R,)
    raw: dict = field(default_factory=dict)
    mse: dict = field(default_factory=dict)        # (method, n) -> (F,)
    ess_mean: dict = field(default_factory=dict)   # (method, n) -> float
    slopes: dict = field(default_factory=dict)     # (method, f_id) -> float
    methods: list[MethodSpec] = field(default_factory=list)

    def reduction_factor(self, baseline: str, method: str, n: int) -> np.ndarray:
        return self.mse[(baseline, n)] / self.mse[(method, n)]


def _points_for(kind: str, n: int, d: int, seed: int) -> PointSet:
    if kind == "mc":
        return lowdisc.mc_points(n, d, seed)
    return lowdisc.rqmc_points(n, d, seed)


def mse_benchmark(methods: list[MethodSpec], target: Target, n_grid: list[int],
                  replicates: int, seed: int,
                  fs: FunctionList | None = None,
                  ground_truth: np.ndarray | None = None) -> EstimateReport:
    """MSE of SNIS estimates over independent randomizations.

    For each method and sample size, ``replicates`` estimates are formed
    with independently derived seeds; the MSE against the declared ground
    truth and the log-log slope of MSE versus n are recorded.
    """
    fs = fs or moments_f_list(target.d)
    if ground_truth is None:
        ground_truth = moments_ground_truth(target)
    report = EstimateReport(f_labels=fs.labels, ground_truth=ground_truth,
                            n_grid=list(n_grid), replicates=replicates,
                            methods=list(methods))
    if replicates < 2:
        raise EstimateError("MSE needs at least 2 replicates")
    for spec in methods:
        for n in n_grid:
            ests = np.zeros((replicates, len(fs.labels)))
            esses = np.zeros(replicates)
            for rep in range(replicates):
                rs = derive_seed(seed, f"bench.{spec.name}.{n}.rep.{rep}")
                ps = _points_for(spec.kind, n, target.d, rs)
                est, diag = snis_estimate(spec.proposal, target, fs, ps)
                ests[rep] = est
                esses[rep] = diag["ess"]
            report.raw[(spec.name, n)] = ests
            report.mse[(spec.name, n)] = np.mean((ests - ground_truth) ** 2, axis=0)
            report.ess_mean[(spec.name, n)] = float(esses.mean())
        # least-squares slope of log2 MSE vs log2 n, per function
        logn = np.log2(np.asarray(n_grid, dtype=np.float64))
        for fi, label in enumerate(fs.labels):
            logm = np.log2([report.mse[(spec.name, n)][fi] for n in n_grid])
            slope = np.polyfit(logn, logm, 1)[0] if len(n_grid) > 1 else np.nan
            report.slopes[(spec.name, label)] = float(slope)
    return report


def write_raw_csv(path, report: EstimateReport) -> None:
    kind_of = {m.name: m.kind for m in report.methods}
    prop_of = {m.name: m.proposal.name for m in report.methods}
    with open(path, "w", newline="") as fh:
        fh.write(CSV_MAGIC + "\n")
        writer = csv.writer(fh)
        writer.writerow(RAW_COLUMNS)
        for spec in report.methods:
            for n in report.n_grid:
                ests = report.raw[(spec.name, n)]
                for rep in range(ests.shape[0]):
                    for fi, label in enumerate(report.f_labels):
                        err = abs(ests[rep, fi] - report.ground_truth[fi])
                        writer.writerow([spec.name, prop_of[spec.name],
                                         kind_of[spec.name], n, rep, label,
                                         repr(float(ests[rep, fi])),
                                         repr(float(err))])


def write_summary_csv(path, report: EstimateReport) -> None:
    prop_of = {m.name: m.proposal.name for m in report.methods}
    with open(path, "w", newline="") as fh:
        fh.write(CSV_MAGIC + "\n")
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for spec in report.methods:
            for n in report.n_grid:
                for fi, label in enumerate(report.f_labels):
                    writer.writerow([spec.name, prop_of[spec.name], n, label,
                                     repr(float(report.mse[(spec.name, n)][fi])),
                                     repr(float(report.ess_mean[(spec.name, n)])),
                                     repr(float(report.slopes[(spec.name, label)]))])
