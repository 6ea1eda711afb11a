"""Command line interface.

Subcommands: run, entropy, mu, blowup, collapse, normalize, models, compare.
Exit codes: 0 success, 1 failed comparison, 2 configuration or usage error,
3 solver failure.
"""

from __future__ import annotations

import argparse
import glob
import hashlib
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from . import analysis, entropy, flow, models, plotting
from .config import ConfigError, config_hash, materialize, read_config
from .geometry import RadialGrid, arclength, scalar_curvature

log = logging.getLogger("ricci_disk")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
PREVIEW_N = 64


def _setup_logging():
    name = os.environ.get("RICCI_LOG_LEVEL", "error").lower()
    level = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(name)
    logging.basicConfig(level=level or logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    if level is None:
        log.error("RICCI_LOG_LEVEL=%r not understood; using error", name)


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")
    return path


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _finite(x):
    return None if x is None or not math.isfinite(x) else float(x)


def default_tau0(spec, sched, cfg) -> float:
    """Singular time of a coarse preview run plus a 10% margin."""
    grid = RadialGrid(PREVIEW_N)
    bg = models.build(spec, grid)
    preview = replace(cfg, n=PREVIEW_N, couple_f=False, tau0=None, checkpoint_path=None,
                      keep_trajectory=False, output_every=1)
    res = flow.run(bg, sched, preview)
    est = analysis.singular_time_estimate(res.series)
    if res.stop_reason == "curvature_stop" and not est.low_confidence:
        T = est.T
    else:
        T = res.final_state.t
    log.info("preview run: stop %s, T estimate %.6g", res.stop_reason, T)
    return 1.1 * T


def execute_run(config_path, out_dir=None):
    """Run one configuration; returns ``(exit code, RunResult, output directory)``."""
    spec, sched, cfg, out = read_config(config_path)
    out_dir = out_dir or out["directory"]
    os.makedirs(out_dir, exist_ok=True)
    if cfg.couple_f and cfg.tau0 is None:
        cfg.tau0 = default_tau0(spec, sched, cfg)
    mat = materialize(spec, sched, cfg)
    cfg.checkpoint_path = os.path.join(out_dir, "checkpoint.json")
    bg = models.build(spec, RadialGrid(cfg.n))
    res = flow.run(bg, sched, cfg)

    series_path = os.path.join(out_dir, "series.csv")
    res.series.to_csv(series_path)
    if out["figures"]:
        plotting.plot_series(res.series, os.path.join(out_dir, "series.png"))
    files = sorted(
        p for p in glob.glob(os.path.join(out_dir, "*"))
        if os.path.isfile(p) and os.path.basename(p) != "manifest.json"
    )
    manifest = {
        "config_hash": config_hash(mat),
        **mat,
        "output_directory": os.path.abspath(out_dir),
        "stop_reason": res.stop_reason,
        "steps": res.steps,
        "final_t": res.final_state.t,
        "files": {os.path.basename(p): _sha256(p) for p in files},
    }
    _write_json(os.path.join(out_dir, "manifest.json"), manifest)
    code = EXIT_SOLVER if res.stop_reason == "dt_floor" else EXIT_OK
    return code, res, out_dir


def _sweep_one(args):
    path, out_dir = args
    try:
        return execute_run(path, out_dir)[0]
    except ConfigError as exc:
        print(f"{path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def cmd_run(args):
    if args.sweep:
        base = args.out or "sweep"
        jobs = [(p, os.path.join(base, os.path.splitext(os.path.basename(p))[0])) for p in args.sweep]
        with ProcessPoolExecutor() as pool:
            codes = list(pool.map(_sweep_one, jobs))
        for (p, d), c in zip(jobs, codes):
            print(json.dumps({"config": p, "output": d, "exit": c}))
        return max(codes)
    if not args.config:
        raise ConfigError(["run needs --config or --sweep"])
    code, res, out_dir = execute_run(args.config, args.out)
    print(json.dumps({"stop_reason": res.stop_reason, "t": res.final_state.t, "output": out_dir}))
    return code


def _load_levels(args):
    """Dyadic checkpoints from a fresh run (``--config``) or an earlier run directory."""
    if args.config:
        code, res, out_dir = execute_run(args.config, args.out)
        return res.checkpoints, res.series, out_dir, code
    out_dir = args.out or "out"
    paths = sorted(glob.glob(os.path.join(out_dir, "checkpoint.json.level*.json")))
    if not paths:
        raise ConfigError([f"no level checkpoints under {out_dir}; pass --config"])
    cks = []
    for p in paths:
        state, pot, _, _ = flow.read_checkpoint(p)
        cks.append((int(p.rsplit("level", 1)[1].split(".")[0]), state, pot))
    series = None
    sp = os.path.join(out_dir, "series.csv")
    if os.path.exists(sp):
        series = flow.TimeSeries.from_csv(sp)
    return cks, series, out_dir, EXIT_OK


def cmd_blowup(args):
    cks, _, out_dir, code = _load_levels(args)
    rec = analysis.blowup_rescale(cks)
    levels = []
    for lv in rec.levels:
        path = os.path.join(out_dir, f"level_{lv.level:02d}.csv")
        np.savetxt(path, np.column_stack([lv.s, lv.w, lv.R]), delimiter=",", header="s,w,R",
                   comments="", fmt="%.17g")
        levels.append({
            "level": lv.level, "t": lv.t, "lambda": lv.lam, "ratio": _finite(lv.ratio),
            "hemisphere_dev": lv.hemisphere_dev, "cigar_dev": lv.cigar_dev,
            "classification": lv.classification,
        })
    report = {"levels": levels, "ratio_eventually_decreasing": analysis.eventually_decreasing(rec.ratios)}
    _write_json(os.path.join(out_dir, "blowup.json"), report)
    plotting.plot_blowup(rec, os.path.join(out_dir, "blowup.png"))
    print(json.dumps(levels[-1]))
    return code


def _radii(args):
    if not args.r:
        return [1.0]
    try:
        r = [float(x) for x in args.r.split(",")]
    except ValueError:
        raise ConfigError([f"--r expects comma separated numbers, got {args.r!r}"]) from None
    if any(not x > 0 for x in r):
        raise ConfigError(["--r values must be positive"])
    return r


def cmd_collapse(args):
    radii = _radii(args)
    if args.checkpoint:
        state = flow.read_checkpoint(args.checkpoint)[0]
        out_dir = args.out or "."
        os.makedirs(out_dir, exist_ok=True)
        reports = [analysis.kappa_noncollapse(state, r) for r in radii]
        rows = [{"r": k.r, "kappa": k.kappa, "admissible": int(k.admissible_centers.size)} for k in reports]
        result = {"t": state.t, "radii": rows}
        good = [(k.r, k.kappa) for k in reports if k.kappa is not None]
        if len(good) >= 2:
            result["loglog_slope"] = analysis.loglog_slope(*zip(*good))
            plotting.plot_kappa(*zip(*good), os.path.join(out_dir, "kappa.png"))
        code = EXIT_OK
    else:
        cks, _, out_dir, code = _load_levels(args)
        rows = []
        for k, state, _ in cks:
            R = float(np.max(np.abs(scalar_curvature(state))))
            scaled = analysis.rescale_state(state, R)
            for r in radii:
                rep = analysis.kappa_noncollapse(scaled, r)
                rows.append({"level": k, "t": state.t, "lambda": R, "r": r, "kappa": rep.kappa})
        result = {"rescaled": True, "levels": rows}
    _write_json(os.path.join(out_dir, "collapse.json"), result)
    print(json.dumps(result))
    return code


def cmd_normalize(args):
    if args.config:
        code, res, out_dir = execute_run(args.config, args.out)
        series = res.series
    else:
        out_dir = args.out or "out"
        path = os.path.join(out_dir, "series.csv")
        if not os.path.exists(path):
            raise ConfigError([f"no series.csv under {out_dir}; pass --config"])
        series, code = flow.TimeSeries.from_csv(path), EXIT_OK
    ns = analysis.normalized_flow(series)
    ns.to_csv(os.path.join(out_dir, "normalized.csv"))
    est = analysis.singular_time_estimate(series)
    report = {
        "final_t_tilde": float(ns.t_tilde[-1]),
        "final_spread": float(ns.spread[-1]),
        "final_h": float(ns.h[-1]),
        "min_lambda_area": float(ns.lambda_area.min()),
        "area_drift": float(np.max(np.abs(ns.area - ns.area[0]))),
        "T_est": _finite(est.T),
        "T_fit_residual": _finite(est.residual),
        "T_low_confidence": est.low_confidence,
    }
    _write_json(os.path.join(out_dir, "normalized.json"), report)
    plotting.plot_normalized(ns, os.path.join(out_dir, "normalized.png"))
    print(json.dumps(report))
    return code


def _checkpoint_potential(args):
    if not args.checkpoint:
        raise ConfigError(["--checkpoint is required"])
    state, pot, sched, _ = flow.read_checkpoint(args.checkpoint)
    if args.tau is not None:
        if not args.tau > 0:
            raise ConfigError(["--tau must be positive"])
        if pot is None or pot.tau != args.tau:
            pot = flow.initial_potential(state, sched, args.tau)
    if pot is None:
        raise ConfigError(["checkpoint carries no potential; pass --tau"])
    return state, pot, sched


def cmd_entropy(args):
    state, pot, _ = _checkpoint_potential(args)
    br = entropy.w_infinity(state, pot)
    report = {
        "t": state.t,
        "tau": br.tau,
        "bulk": br.bulk,
        "boundary": br.boundary,
        "total": br.total,
        "integrand": entropy.monotonicity_integrand(state, pot),
        "integrand_unsquared": entropy.monotonicity_integrand(state, pot, squared=False),
        "boundary_flux": entropy.boundary_flux_term(state, pot),
        "normalization": flow.normalization(state, pot),
    }
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write_json(os.path.join(args.out, "entropy.json"), report)
    print(json.dumps(report))
    return EXIT_OK


def cmd_mu(args):
    if not args.checkpoint:
        raise ConfigError(["--checkpoint is required"])
    state, pot, _, _ = flow.read_checkpoint(args.checkpoint)
    tau = args.tau if args.tau is not None else (pot.tau if pot is not None else None)
    if tau is None or not tau > 0:
        raise ConfigError(["mu needs a positive --tau"])
    res = entropy.mu_infinity(state, tau)
    report = {
        "tau": tau,
        "mu": res.mu,
        "iterations": res.iterations,
        "constraint_residual": res.constraint_residual,
        "grad_norm": res.grad_norm,
        "converged": res.converged,
    }
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    s = arclength(state)
    np.savetxt(os.path.join(out_dir, "phi.csv"), np.column_stack([s, res.phi]), delimiter=",",
               header="s,phi", comments="", fmt="%.17g")
    plotting.plot_profile(s, res.phi, os.path.join(out_dir, "phi.png"))
    if args.r:
        # cutoff candidates around random centers, each against the infimum at tau = r^2
        rng = np.random.default_rng(args.seed)
        probes = []
        for r in _radii(args):
            center = float(rng.uniform(0.0, s[-1]))
            b = entropy.cutoff_entropy_bound(state, center, r)
            m = entropy.mu_infinity(state, r * r).mu
            probes.append({"center_s": center, "r": r, "bound": b.value, "mu": m,
                           "vol_ratio": b.vol_ratio, "boundary_bound": b.boundary_bound})
        report["cutoff_probes"] = probes
    _write_json(os.path.join(out_dir, "mu.json"), report)
    print(json.dumps(report))
    return EXIT_OK


def cmd_models(args):
    schema = models.parameter_schema()
    for rec in schema:
        print(json.dumps(rec, sort_keys=True))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write_json(os.path.join(args.out, "models.json"), schema)
    return EXIT_OK


def cmd_compare(args):
    if args.against != "exact-cap":
        raise ConfigError([f"unknown comparison target {args.against!r}"])
    if not args.config:
        raise ConfigError(["compare needs --config"])
    spec = read_config(args.config)[0]
    if not isinstance(spec, models.SphericalCap):
        raise ConfigError(["exact-cap comparison needs a spherical cap model"])
    code, res, out_dir = execute_run(args.config, args.out)
    t = res.series.column("t")
    K0 = spec.K
    exact = 2.0 * K0 / (1.0 - 2.0 * K0 * t)
    err = np.maximum(np.abs(res.series.column("r_max") - exact), np.abs(res.series.column("r_min") - exact)) / exact
    est = analysis.singular_time_estimate(res.series)
    report = {
        "against": "exact-cap",
        "max_rel_R_error": float(err.max()),
        "rows": len(t),
        "T_exact": 1.0 / (2.0 * K0),
        "T_est": _finite(est.T),
        "stop_reason": res.stop_reason,
    }
    _write_json(os.path.join(out_dir, "compare.json"), report)
    print(json.dumps(report))
    if code != EXIT_OK:
        return code
    return EXIT_OK if report["max_rel_R_error"] <= 0.01 else EXIT_FAILED


COMMANDS = {
    "run": cmd_run,
    "entropy": cmd_entropy,
    "mu": cmd_mu,
    "blowup": cmd_blowup,
    "collapse": cmd_collapse,
    "normalize": cmd_normalize,
    "models": cmd_models,
    "compare": cmd_compare,
}


def build_parser():
    p = argparse.ArgumentParser(prog="ricci-disk", description="Ricci flow on disks with prescribed boundary curvature.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="INI configuration file")
        sp.add_argument("--out", help="output directory")
        return sp

    sp = common(sub.add_parser("run", help="integrate the flow"))
    sp.add_argument("--sweep", nargs="+", metavar="CONFIG", help="run several configs in parallel")
    for name in ("entropy", "mu"):
        sp = sub.add_parser(name, help=f"{name} of a checkpointed state")
        sp.add_argument("--checkpoint", required=True)
        sp.add_argument("--tau", type=float)
        sp.add_argument("--out")
        if name == "mu":
            sp.add_argument("--r", help="comma separated cutoff radii to probe")
            sp.add_argument("--seed", type=int, default=0, help="seed for probe centers")
    common(sub.add_parser("blowup", help="rescale dyadic checkpoints"))
    sp = common(sub.add_parser("collapse", help="annulus volume ratios"))
    sp.add_argument("--checkpoint")
    sp.add_argument("--r", help="comma separated radii")
    common(sub.add_parser("normalize", help="area-normalized flow"))
    sp = sub.add_parser("models", help="list models and parameters")
    sp.add_argument("action", nargs="?", choices=["list"], default="list")
    sp.add_argument("--out")
    sp = common(sub.add_parser("compare", help="compare with a closed-form solution"))
    sp.add_argument("--against", default="exact-cap", choices=["exact-cap"])
    return p


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (flow.StepRejected, flow.TauExhausted, FloatingPointError, ValueError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
