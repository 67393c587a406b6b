"""Reverse-KL training of transport maps on RQMC batches.

The objective is the sample average of -log|det J| - log p(tau(u)); with
the fixed-batch policy it is deterministic in theta, so limited-memory
BFGS with Armijo backtracking applies directly.  Restarts differ in their
scramble seed and in small weight-logit jitter; the restart with the
smallest final objective wins.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from . import flow, lowdisc
from .lowdisc import PointSet
from .targets import Target


class TrainError(RuntimeError):
    pass


def derive_seed(master: int, tag: str) -> int:
    """Stable 63-bit stream seed from a master seed and a role tag."""
    h = hashlib.sha256(f"{master}:{tag}".encode()).digest()
    return int.from_bytes(h[:8], "big") >> 1


@dataclass
class FitConfig:
    n_train: int = 256
    n_layers: int = 3
    shape_bound: int = 7
    base: str = "gauss"
    restarts: int = 10
    max_iter: int = 500
    memory: int = 10
    c1: float = 1e-4
    grad_tol: float = 1e-6
    batch_policy: str = "fixed"      # fixed | refresh
    init_logit: float = 6.0
    jitter: float = 0.01
    refresh_step: float = 0.05

    def __post_init__(self):
        if self.n_train < 1 or self.n_train & (self.n_train - 1):
            raise TrainError("n_train must be a power of 2")
        if self.restarts < 1:
            raise TrainError("restarts must be >= 1")
        if self.batch_policy not in ("fixed", "refresh"):
            raise TrainError(f"unknown batch policy {self.batch_policy!r}")


@dataclass
class FitResult:
    map: flow.TransportMap
    objective: float
    trace: list[float]
    restart_chosen: int
    seed: int
    per_restart_objective: list[float] = field(default_factory=list)
    # KL on the shared selection batch, comparable across restarts
    selection_objective: float = np.nan
    per_restart_selection: list[float] = field(default_factory=list)


def kl_objective(tmap: flow.TransportMap, target: Target,
                 ps: PointSet) -> tuple[float, np.ndarray]:
    """Batch-average KL integrand and its analytic parameter gradient."""
    if ps.d != target.d:
        raise TrainError(f"point dimension {ps.d} != target dimension {target.d}")
    n = ps.n
    rec = flow.forward(tmap, ps.points)
    logp = target.log_density(rec.x)
    bad = ~np.isfinite(logp)
    if bad.any():
        raise TrainError(f"non-finite target density at point index {int(np.argmax(bad))}")
    value = float(np.mean(-rec.logdet - logp))
    v_x = -target.score(rec.x) / n
    _, grad = flow.forward_grad(tmap, ps.points, v_x, v_logdet=-1.0 / n)
    if not np.all(np.isfinite(grad)):
        raise TrainError("non-finite gradient")
    return value, grad


def lbfgs_minimize(objective, theta0: np.ndarray, max_iter: int = 500,
                   memory: int = 10, c1: float = 1e-4, grad_tol: float = 1e-6,
                   max_halvings: int = 30,
                   callback=None) -> tuple[np.ndarray, float, list[float]]:
    """Two-loop-recursion L-BFGS with Armijo backtracking.

    Returns the best iterate seen, its value, and the per-iteration value
    trace.  Curvature pairs with s.y <= 1e-10 are skipped to keep the
    inverse-Hessian approximation positive definite.
    """
    theta = np.asarray(theta0, dtype=np.float64).copy()
    f, g = objective(theta)
    if not np.isfinite(f):
        raise TrainError("objective is non-finite at the initial point")
    best_theta, best_f = theta.copy(), f
    trace = [f]
    s_list: list[np.ndarray] = []
    y_list: list[np.ndarray] = []
    for _ in range(max_iter):
        if np.linalg.norm(g) <= grad_tol:
            break
        # two-loop recursion
        q = g.copy()
        alphas = []
        for s, y in zip(reversed(s_list), reversed(y_list)):
            rho = 1.0 / (s @ y)
            a = rho * (s @ q)
            alphas.append((a, rho, s, y))
            q -= a * y
        if y_list:
            s, y = s_list[-1], y_list[-1]
            q *= (s @ y) / (y @ y)
        for a, rho, s, y in reversed(alphas):
            b = rho * (y @ q)
            q += (a - b) * s
        direction = -q
        slope = g @ direction
        # Armijo alone does not enforce the curvature condition, so the
        # memory can go stale and yield near-orthogonal directions; when
        # descent along it is negligible, restart from steepest descent.
        gnorm = np.linalg.norm(g)
        if slope >= -1e-4 * gnorm * np.linalg.norm(direction):
            s_list.clear()
            y_list.clear()
            direction = -g
            slope = -(g @ g)
        def try_step(step):
            cand = theta + step * direction
            try:
                f_new, g_new = objective(cand)
            except (TrainError, flow.FlowError):
                return cand, np.inf, None
            return cand, f_new, g_new

        step = 1.0
        accepted = False
        for _ in range(max_halvings):
            cand, f_new, g_new = try_step(step)
            if np.isfinite(f_new) and f_new <= f + c1 * step * slope:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        if step == 1.0:
            # the unit step may be far short when the memory underestimates
            # curvature scale; expand while Armijo keeps holding
            for _ in range(max_halvings):
                cand2, f2, g2 = try_step(2.0 * step)
                if not (np.isfinite(f2) and f2 <= f + c1 * 2.0 * step * slope
                        and f2 < f_new):
                    break
                step *= 2.0
                cand, f_new, g_new = cand2, f2, g2
        s_vec = step * direction
        y_vec = g_new - g
        if s_vec @ y_vec > 1e-10:
            s_list.append(s_vec)
            y_list.append(y_vec)
            if len(s_list) > memory:
                s_list.pop(0)
                y_list.pop(0)
        theta, f, g = cand, f_new, g_new
        trace.append(f)
        if f < best_f:
            best_f, best_theta = f, theta.copy()
        if callback is not None:
            callback(theta, f)
    return best_theta, best_f, trace


def initial_map(target_d: int, config: FitConfig,
                template: flow.TransportMap | None = None) -> flow.TransportMap:
    if template is not None:
        return template.copy()
    grid = flow.default_shape_grid(config.shape_bound)
    return flow.identity_map(target_d, base=config.base, n_layers=config.n_layers,
                             shape_grid=grid, identity_logit=config.init_logit)


def fit(target: Target, config: FitConfig, seed: int,
        template: flow.TransportMap | None = None,
        param_mask: np.ndarray | None = None) -> FitResult:
    """Multi-restart reverse-KL fit; the smallest-objective restart is kept.

    ``template`` fixes the map structure (rotation, tri_rank, grid);
    ``param_mask`` freezes parameters where False (used for constrained
    variants such as the mean-field Gaussian).
    """
    base_map = initial_map(target.d, config, template)
    theta_init = flow.pack_params(base_map)
    S = base_map.n_shapes
    d = target.d
    failures = []
    results = []
    for r in range(config.restarts):
        rseed = derive_seed(seed, f"fit.restart.{r}")
        rng = np.random.default_rng(derive_seed(seed, f"fit.jitter.{r}"))
        theta0 = theta_init.copy()
        # jitter only the weight logits, keeping all restarts near the base measure
        jmap = flow.unpack_params(base_map, theta0)
        for layer in jmap.layers:
            layer.logits = layer.logits + config.jitter * rng.standard_normal((d, S))
        theta0 = flow.pack_params(jmap)
        if param_mask is not None:
            theta0 = np.where(param_mask, theta0, theta_init)

        try:
            if config.batch_policy == "fixed":
                batch = lowdisc.rqmc_points(config.n_train, d, rseed)

                def objective(th):
                    if param_mask is not None:
                        th = np.where(param_mask, th, theta_init)
                    val, grad = kl_objective(flow.unpack_params(base_map, th), target, batch)
                    if param_mask is not None:
                        grad = np.where(param_mask, grad, 0.0)
                    return val, grad

                theta, obj, trace = lbfgs_minimize(
                    objective, theta0, max_iter=config.max_iter, memory=config.memory,
                    c1=config.c1, grad_tol=config.grad_tol)
            else:
                theta, obj, trace = _refresh_descent(
                    base_map, target, theta0, theta_init, param_mask, config, rseed)
            results.append((obj, r, theta, trace))
        except (TrainError, flow.FlowError) as exc:
            failures.append(f"restart {r}: {exc}")
    if not results:
        raise TrainError("all restarts failed: " + "; ".join(failures))
    # Restart objectives are averaged over different scrambles, so they are
    # not directly comparable (and at small n_train the in-sample winner is
    # often overfit).  Candidates are therefore ranked by their KL on one
    # shared, larger selection batch.
    n_select = max(1024, 4 * config.n_train)
    select_batch = lowdisc.rqmc_points(n_select, d, derive_seed(seed, "fit.select"))
    scored = []
    for obj, r, theta, trace in results:
        th = np.where(param_mask, theta, theta_init) if param_mask is not None else theta
        try:
            sel, _ = kl_objective(flow.unpack_params(base_map, th), target,
                                  select_batch)
        except (TrainError, flow.FlowError):
            sel = np.inf
        scored.append((sel, obj, r, theta, trace))
    sel, obj, r, theta, trace = min(scored, key=lambda t: (t[0], t[2]))
    if not np.isfinite(sel):
        raise TrainError("every restart diverged on the selection batch")
    if param_mask is not None:
        theta = np.where(param_mask, theta, theta_init)
    fitted = flow.unpack_params(base_map, theta)
    order = sorted(scored, key=lambda t: t[2])
    return FitResult(map=fitted, objective=obj, trace=trace, restart_chosen=r,
                     seed=seed,
                     per_restart_objective=[t[1] for t in order],
                     selection_objective=sel,
                     per_restart_selection=[t[0] for t in order])


def _refresh_descent(base_map, target, theta0, theta_init, param_mask,
                     config: FitConfig, rseed: int):
    """Plain gradient descent with a fresh scramble every iteration."""
    theta = theta0.copy()
    trace = []
    best = (np.inf, theta.copy())
    for it in range(config.max_iter):
        batch = lowdisc.rqmc_points(config.n_train, target.d,
                                    derive_seed(rseed, f"refresh.{it}"))
        th = np.where(param_mask, theta, theta_init) if param_mask is not None else theta
        val, grad = kl_objective(flow.unpack_params(base_map, th), target, batch)
        if param_mask is not None:
            grad = np.where(param_mask, grad, 0.0)
        trace.append(val)
        if val < best[0]:
            best = (val, theta.copy())
        theta = theta - config.refresh_step * grad
    return best[1], best[0], trace
