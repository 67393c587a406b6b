"""Command-line entry point: fit / subspace / estimate / benchmark.

Configs are TOML or JSON (auto-detected by extension); unknown keys are
rejected.  All randomness derives from a master seed hashed with role
tags, so adding workflows never perturbs existing streams.  Exit codes:
0 ok, 2 usage or config error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import estimate, flow, subspace as subspace_mod, targets, train

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib


class ConfigError(ValueError):
    pass


_SECTIONS = {
    "target": {"name", "mu", "var", "d", "n_obs", "prior_var", "data_seed", "path"},
    "flow": {"base", "n_layers", "shape_bound", "mode", "subspace_samples", "threshold"},
    "fit": {"n_train", "restarts", "max_iter", "memory", "grad_tol", "batch_policy"},
    "estimate": {"n", "kind"},
    "benchmark": {"n_grid", "replicates", "methods", "baseline", "model",
                  "reference_truth", "reference_n", "reference_scrambles"},
    "output": {"dir"},
}


def load_config(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    if p.suffix == ".json":
        doc = json.loads(p.read_text())
    else:
        with open(p, "rb") as fh:
            doc = tomllib.load(fh)
    for section, body in doc.items():
        if section == "seed":
            continue
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section {section!r}")
        for key in body:
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown key {section}.{key}")
    if "target" not in doc or "name" not in doc["target"]:
        raise ConfigError("config must declare target.name")
    return doc


def build_target(doc: dict) -> targets.Target:
    spec = doc["target"]
    name = spec["name"]
    seed = int(doc.get("seed", 0))
    if name == "gaussian":
        mu = np.asarray(spec.get("mu", [0.0, 0.0]), dtype=np.float64)
        var = np.asarray(spec.get("var", np.ones(mu.shape[0])), dtype=np.float64)
        return targets.gaussian_target(mu, np.diag(var))
    if name == "banana":
        return targets.banana_target()
    if name == "logistic":
        data = targets.make_logistic_synthetic(
            d=int(spec.get("d", 50)), n_obs=int(spec.get("n_obs", 20)),
            seed=int(spec.get("data_seed", seed)),
            prior_var=float(spec.get("prior_var", 1.0)))
        return targets.logistic_target(data)
    if name == "logistic_csv":
        if "path" not in spec:
            raise ConfigError("logistic_csv target needs target.path")
        data = targets.load_logistic_csv(spec["path"],
                                         prior_var=float(spec.get("prior_var", 1.0)))
        return targets.logistic_target(data)
    raise ConfigError(f"unknown target name {name!r}")


def build_fit_config(doc: dict) -> train.FitConfig:
    fl = doc.get("flow", {})
    ft = doc.get("fit", {})
    try:
        return train.FitConfig(
            n_train=int(ft.get("n_train", 256)),
            n_layers=int(fl.get("n_layers", 3)),
            shape_bound=int(fl.get("shape_bound", 7)),
            base=str(fl.get("base", "gauss")),
            restarts=int(ft.get("restarts", 10)),
            max_iter=int(ft.get("max_iter", 500)),
            memory=int(ft.get("memory", 10)),
            grad_tol=float(ft.get("grad_tol", 1e-6)),
            batch_policy=str(ft.get("batch_policy", "fixed")),
        )
    except train.TrainError as exc:
        raise ConfigError(str(exc)) from exc


def _out_dir(doc: dict, override: str | None) -> Path:
    out = Path(override or doc.get("output", {}).get("dir", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _subspace_template(doc: dict, target, seed: int):
    fl = doc.get("flow", {})
    threshold = float(fl.get("threshold", 0.99))
    if not 0.0 < threshold <= 1.0:
        raise ConfigError(f"invalid subspace threshold {threshold}")
    sub = subspace_mod.estimate_subspace(
        target, int(fl.get("subspace_samples", 256)), seed, threshold=threshold)
    return sub


def cmd_fit(doc: dict, out_dir: Path, seed: int, quiet: bool) -> int:
    target = build_target(doc)
    config = build_fit_config(doc)
    template = None
    mode = doc.get("flow", {}).get("mode", "full")
    if mode == "subspace":
        sub = _subspace_template(doc, target, seed)
        if sub.rank < 1:
            print("warning: degenerate subspace, falling back to full mode",
                  file=sys.stderr)
        else:
            template = subspace_mod.split_map_config(
                sub, target.d, base=config.base, n_layers=config.n_layers,
                shape_grid=flow.default_shape_grid(config.shape_bound))
    elif mode != "full":
        raise ConfigError(f"unknown flow mode {mode!r}")
    result = train.fit(target, config, seed, template=template)
    flow.save_model(result.map, out_dir / "model.json")
    sidecar = {
        "objective_trace": result.trace,
        "restart_chosen": result.restart_chosen,
        "seed": seed,
        "config": {k: v for k, v in vars(config).items()},
    }
    (out_dir / "fit_trace.json").write_text(json.dumps(sidecar, indent=1))
    if not quiet:
        print(f"fit: objective={result.objective:.6f} "
              f"restart={result.restart_chosen} -> {out_dir / 'model.json'}")
    return 0


def cmd_subspace(doc: dict, out_dir: Path, seed: int, quiet: bool) -> int:
    target = build_target(doc)
    sub = _subspace_template(doc, target, seed)
    total = sub.eigenvalues.sum()
    top_ratio = float(sub.eigenvalues[0] / total) if total > 0 else 0.0
    if sub.degenerate:
        print("warning: degenerate relative scores; r=0 (identity rotation)",
              file=sys.stderr)
        print(f"subspace: r=0 top_eigenvalue_ratio={top_ratio:.4f}")
        return 0
    config = build_fit_config(doc)
    scaffold = subspace_mod.split_map_config(
        sub, target.d, base=config.base, n_layers=config.n_layers,
        shape_grid=flow.default_shape_grid(config.shape_bound))
    flow.save_model(scaffold, out_dir / "model.json")
    if not quiet:
        print(f"subspace: r={sub.rank} top_eigenvalue_ratio={top_ratio:.4f} "
              f"explained={sub.explained_ratio:.4f}")
    return 0


def cmd_estimate(doc: dict, model_path: str | None, out_dir: Path, seed: int,
                 quiet: bool) -> int:
    if not model_path:
        raise ConfigError("estimate requires --model PATH")
    try:
        tmap = flow.load_model(model_path)
    except (OSError, json.JSONDecodeError, flow.FlowError, KeyError) as exc:
        raise ConfigError(f"cannot read model: {exc}") from exc
    target = build_target(doc)
    est_cfg = doc.get("estimate", {})
    n = int(est_cfg.get("n", 1024))
    if n < 1 or n & (n - 1):
        raise ConfigError("estimate.n must be a power of 2")
    kind = est_cfg.get("kind", "rqmc")
    ps = estimate._points_for(kind, n, target.d, train.derive_seed(seed, "estimate"))
    fs = estimate.moments_f_list(target.d)
    proposal = estimate.MapProposal(tmap)
    est, diag = estimate.snis_estimate(proposal, target, fs, ps)
    path = out_dir / "estimates.csv"
    with open(path, "w", newline="") as fh:
        fh.write(estimate.CSV_MAGIC + "\n")
        writer = csv.writer(fh)
        writer.writerow(["f_id", "estimate", "ess", "n", "kind"])
        for label, value in zip(fs.labels, est):
            writer.writerow([label, repr(float(value)), repr(diag["ess"]), n, kind])
    if not quiet:
        print(f"estimate: n={n} ess={diag['ess']:.1f} -> {path}")
    return 0


def _build_methods(doc: dict, target, model_path: str | None, seed: int):
    bench = doc.get("benchmark", {})
    names = bench.get("methods", ["mc-prior", "rqmc-prior"])
    prior_var = float(doc.get("target", {}).get("prior_var", 1.0))
    methods = []
    tmap = None
    for name in names:
        try:
            kind, prop = name.split("-", 1)
        except ValueError:
            raise ConfigError(f"method name {name!r} is not '<kind>-<proposal>'")
        if kind not in ("mc", "rqmc"):
            raise ConfigError(f"unknown point kind in method {name!r}")
        if prop == "prior":
            proposal = estimate.prior_proposal(target.d, prior_var)
        elif prop in ("map", "tqmc"):
            mp = bench.get("model", model_path)
            if not mp:
                raise ConfigError(f"method {name!r} needs a model (benchmark.model)")
            if tmap is None:
                tmap = flow.load_model(mp)
            proposal = estimate.MapProposal(tmap, name="tqmc")
        elif prop == "laplace":
            proposal = estimate.laplace_proposal(target)
        elif prop == "mfg":
            proposal = estimate.mfg_proposal(target, seed=train.derive_seed(seed, "mfg"))
        else:
            raise ConfigError(f"unknown proposal in method {name!r}")
        methods.append(estimate.MethodSpec(name=name, proposal=proposal, kind=kind))
    return methods


def reference_moments(tmap: flow.TransportMap, target, n: int, n_scrambles: int,
                      seed: int) -> np.ndarray:
    """Long-run SNIS reference moments (flagged, not exact ground truth)."""
    fs = estimate.moments_f_list(target.d)
    proposal = estimate.MapProposal(tmap)
    acc = np.zeros(len(fs.labels))
    for rep in range(n_scrambles):
        ps = estimate._points_for("rqmc", n, target.d,
                                  train.derive_seed(seed, f"reference.{rep}"))
        est, _ = estimate.snis_estimate(proposal, target, fs, ps)
        acc += est
    return acc / n_scrambles


def cmd_benchmark(doc: dict, model_path: str | None, out_dir: Path, seed: int,
                  quiet: bool) -> int:
    target = build_target(doc)
    bench = doc.get("benchmark", {})
    n_grid = [int(n) for n in bench.get("n_grid", [64, 128, 256, 512, 1024])]
    for n in n_grid:
        if n < 1 or n & (n - 1):
            raise ConfigError(f"benchmark n={n} is not a power of 2")
    replicates = int(bench.get("replicates", 50))
    methods = _build_methods(doc, target, model_path, seed)
    ground_truth = None
    if bench.get("reference_truth", False):
        mp = bench.get("model", model_path)
        if not mp:
            raise ConfigError("reference_truth needs a model")
        ground_truth = reference_moments(
            flow.load_model(mp), target,
            int(bench.get("reference_n", 2**17)),
            int(bench.get("reference_scrambles", 32)),
            train.derive_seed(seed, "reference"))
        if not quiet:
            print("ground truth: long-run SNIS reference, not exact")
    elif target.true_mean is None:
        raise ConfigError("target has no analytic moments; set "
                          "benchmark.reference_truth = true with a model")
    try:
        report = estimate.mse_benchmark(methods, target, n_grid, replicates, seed,
                                        ground_truth=ground_truth)
    except estimate.EstimateError as exc:
        raise ConfigError(str(exc)) from exc
    estimate.write_raw_csv(out_dir / "raw.csv", report)
    estimate.write_summary_csv(out_dir / "summary.csv", report)
    baseline = bench.get("baseline")
    if not quiet:
        print("method            f_id        slope")
        for spec in methods:
            for label in (report.f_labels[0], report.f_labels[-1]):
                print(f"{spec.name:<17} {label:<11} "
                      f"{report.slopes[(spec.name, label)]:+.3f}")
        if baseline:
            for spec in methods:
                if spec.name == baseline:
                    continue
                rf = np.mean([report.reduction_factor(baseline, spec.name, n).mean()
                              for n in n_grid])
                print(f"mean reduction factor {spec.name} vs {baseline}: {rf:.2f}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="tqmc",
                                     description="Transport-map RQMC workflows")
    parser.add_argument("command",
                        choices=["fit", "subspace", "estimate", "benchmark"])
    parser.add_argument("--config", required=True)
    parser.add_argument("--model", default=None)
    parser.add_argument("--out", default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--quiet", action="store_true")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help and 2 for usage errors
        return 0 if exc.code == 0 else 2
    try:
        doc = load_config(args.config)
    except (ConfigError, json.JSONDecodeError, tomllib.TOMLDecodeError,
            targets.TargetError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    seed = args.seed if args.seed is not None else int(doc.get("seed", 0))
    try:
        out_dir = _out_dir(doc, args.out)
        if args.command == "fit":
            return cmd_fit(doc, out_dir, seed, args.quiet)
        if args.command == "subspace":
            return cmd_subspace(doc, out_dir, seed, args.quiet)
        if args.command == "estimate":
            return cmd_estimate(doc, args.model, out_dir, seed, args.quiet)
        return cmd_benchmark(doc, args.model, out_dir, seed, args.quiet)
    except (ConfigError, targets.TargetError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (train.TrainError, estimate.EstimateError, flow.FlowError,
            subspace_mod.SubspaceError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
