"""Command-line front end for simulation, analysis, optimization, sweeps,
and built-in verification scenarios.

Configs are YAML with a schema_version key; unknown keys are rejected so
typos fail fast instead of silently running defaults. Every output
directory gets a manifest with the config echo, tool version, and wall
time, enough to reproduce the run.
"""
from __future__ import annotations

import argparse
import itertools
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np
import yaml

from . import __version__, analysis, drives, integrator, model, optimizer

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_VERIFY = 3

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Malformed or unknown configuration content."""


def _check_keys(section: dict, allowed, where: str):
    unknown = set(section) - set(allowed)
    if unknown:
        raise ConfigError("unknown key(s) %s in %s; allowed: %s" % (
            ", ".join(sorted(unknown)), where, ", ".join(sorted(allowed))))


TOP_KEYS = ("schema_version", "params", "drive", "integrator", "simulate",
            "analysis", "optimizer", "sweep")
PARAM_KEYS = ("delta", "omega_m", "g_m", "kappa", "quality", "omega_c")
DRIVE_KEYS = ("kind", "e0", "t_s", "sigma", "omega", "samples", "period")
INTEGRATOR_KEYS = ("rel_tol", "abs_tol", "max_step", "sample_dt")
SIMULATE_KEYS = ("cycles",)
ANALYSIS_KEYS = ("output", "skip_cycles", "eps_x", "eps_y", "window_cycles")
OPTIMIZER_KEYS = ("kind", "lower", "upper", "output", "population",
                  "generations", "mutation_sigma", "crossover_rate",
                  "elitism", "seed", "cycles", "skip_cycles", "tournament",
                  "blend_alpha", "target_cost")
SWEEP_KEYS = ("grid",)


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc))
    except yaml.YAMLError as exc:
        raise ConfigError("config %s is not valid YAML: %s" % (path, exc))
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a mapping")
    if cfg.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError("config must declare schema_version: %d"
                          % SCHEMA_VERSION)
    _check_keys(cfg, TOP_KEYS, "config root")
    for name, keys in (("params", PARAM_KEYS), ("drive", DRIVE_KEYS),
                       ("integrator", INTEGRATOR_KEYS),
                       ("simulate", SIMULATE_KEYS),
                       ("analysis", ANALYSIS_KEYS),
                       ("optimizer", OPTIMIZER_KEYS), ("sweep", SWEEP_KEYS)):
        section = cfg.get(name)
        if section is None:
            continue
        if not isinstance(section, dict):
            raise ConfigError("section %r must be a mapping" % name)
        _check_keys(section, keys, "section %r" % name)
    return cfg


def build_params(cfg: dict) -> model.OmParams:
    return model.OmParams(**cfg.get("params", {}))


def build_drive(cfg: dict) -> drives.DriveSpec:
    section = dict(cfg.get("drive") or {})
    if "kind" not in section:
        raise ConfigError("drive section must set 'kind'")
    if "samples" in section:
        section["samples"] = tuple(
            (float(t), float(v)) for t, v in section["samples"])
    if "period" in section:
        section["period_hint"] = float(section.pop("period"))
    return drives.DriveSpec(**section)


def build_integrator(cfg: dict) -> integrator.IntegratorConfig:
    return integrator.IntegratorConfig(**(cfg.get("integrator") or {}))


def _write_manifest(out_dir: str, cfg: dict | None, elapsed: float,
                    extra: dict | None = None):
    payload = {
        "tool": "ompulse",
        "version": __version__,
        "schema_version": SCHEMA_VERSION,
        "wall_time_s": round(elapsed, 3),
        "config": cfg,
    }
    if extra:
        payload.update(extra)
    with open(os.path.join(out_dir, "manifest.yaml"), "w") as fh:
        yaml.safe_dump(payload, fh, sort_keys=False)


def _analysis_opts(cfg: dict, args) -> dict:
    section = dict(cfg.get("analysis") or {}) if cfg else {}
    opts = {
        "output": section.get("output", "photon"),
        "skip_cycles": section.get("skip_cycles", 0),
        "eps_x": section.get("eps_x", 0.02),
        "eps_y": section.get("eps_y", 0.02),
        "window_cycles": section.get("window_cycles", 0.5),
    }
    if getattr(args, "skip_cycles", None) is not None:
        opts["skip_cycles"] = args.skip_cycles
    if getattr(args, "output", None) is not None:
        opts["output"] = args.output
    return opts


def _analyze_trajectory(traj: integrator.Trajectory, opts: dict):
    """Per-cycle metrics, summary lines, and the phonon plateau report."""
    curves = analysis.normalize(traj, opts["output"],
                                skip_cycles=opts["skip_cycles"])
    metrics = [analysis.cycle_metrics(c, opts["eps_x"], opts["eps_y"])
               for c in curves]
    mean_f = analysis.mean_form_factor(metrics)
    verdicts = [m.storing for m in metrics]
    verdict = max(set(verdicts), key=verdicts.count) if verdicts else "indeterminate"

    per_cycle = int(round(traj.period / traj.sample_dt))
    window = max(2, int(round(opts["window_cycles"] * per_cycle)))
    start = opts["skip_cycles"] * per_cycle
    try:
        plateaus = analysis.detect_jumps(traj.n_phonon[start:], window)
    except ValueError:
        plateaus = None
    return metrics, mean_f, verdict, plateaus


def _summary_lines(metrics, mean_f, verdict, plateaus):
    lines = [
        "cycles_analyzed: %d" % len(metrics),
        "mean_form_factor: %.17g" % mean_f,
        "max_self_intersections: %d" % max(
            (m.n_intersections for m in metrics), default=0),
        "storing_verdict: %s" % verdict,
    ]
    if plateaus is None:
        lines.append("phonon_plateaus: not-computed (series too short)")
    else:
        lines.append("phonon_plateaus: %d" % plateaus.n_plateaus)
        for first, last, level in plateaus.plateaus:
            lines.append("  plateau windows %d-%d level %.6g"
                         % (first, last, level))
        if plateaus.jump_windows:
            lines.append("  jump windows: %s" % ",".join(
                str(k) for k in plateaus.jump_windows))
    return lines


def cmd_simulate(args) -> int:
    t0 = time.time()
    cfg = load_config(args.config)
    params = build_params(cfg)
    spec = build_drive(cfg)
    int_cfg = build_integrator(cfg)
    cycles = int((cfg.get("simulate") or {}).get("cycles", 1))
    if cycles < 1:
        raise ConfigError("simulate.cycles must be at least 1")
    traj = integrator.integrate(params, spec,
                                horizon=cycles * drives.period(spec),
                                cfg=int_cfg)
    os.makedirs(args.out, exist_ok=True)
    traj_path = os.path.join(args.out, "trajectory.csv")
    traj.to_csv(traj_path)
    _write_manifest(args.out, cfg, time.time() - t0,
                    {"artifacts": ["trajectory.csv"]})
    print("wrote %s (%d samples, %d cycle(s))"
          % (traj_path, len(traj.times), cycles))
    return EXIT_OK


def cmd_analyze(args) -> int:
    t0 = time.time()
    cfg = load_config(args.config) if args.config else None
    traj = integrator.Trajectory.from_csv(args.trajectory)
    opts = _analysis_opts(cfg, args)
    metrics, mean_f, verdict, plateaus = _analyze_trajectory(traj, opts)
    os.makedirs(args.out, exist_ok=True)
    analysis.metrics_to_csv(os.path.join(args.out, "metrics.csv"),
                            metrics, mean_f)
    lines = _summary_lines(metrics, mean_f, verdict, plateaus)
    with open(os.path.join(args.out, "summary.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    _write_manifest(args.out, cfg, time.time() - t0,
                    {"artifacts": ["metrics.csv", "summary.txt"],
                     "trajectory": os.path.abspath(args.trajectory),
                     "analysis_options": opts})
    print("\n".join(lines))
    return EXIT_OK


def cmd_optimize(args) -> int:
    t0 = time.time()
    cfg = load_config(args.config)
    section = cfg.get("optimizer")
    if not section:
        raise ConfigError("optimize requires an 'optimizer' config section")
    for key in ("kind", "lower", "upper"):
        if key not in section:
            raise ConfigError("optimizer section must set %r" % key)
    kind = section["kind"]
    space = optimizer.SearchSpace.for_drive(
        kind, [float(v) for v in section["lower"]],
        [float(v) for v in section["upper"]])
    ga_keys = ("population", "generations", "mutation_sigma",
               "crossover_rate", "elitism", "seed", "cycles", "skip_cycles",
               "tournament", "blend_alpha", "target_cost")
    ga_cfg = optimizer.GaConfig(
        **{k: section[k] for k in ga_keys if k in section})
    if args.seed is not None:
        ga_cfg = replace(ga_cfg, seed=args.seed)
    if args.skip_cycles is not None:
        ga_cfg = replace(ga_cfg, skip_cycles=args.skip_cycles)
    output = section.get("output", "photon")
    params = build_params(cfg)
    int_cfg = build_integrator(cfg)
    jobs = args.jobs or os.cpu_count() or 1

    result = optimizer.optimize_drive(kind, space, params, ga_cfg,
                                      output=output, int_cfg=int_cfg,
                                      jobs=jobs)
    os.makedirs(args.out, exist_ok=True)
    best_spec = optimizer.drive_from_theta(kind, result.theta_star)
    horizon = (ga_cfg.cycles + ga_cfg.skip_cycles) * drives.period(best_spec)
    traj = integrator.integrate(params, best_spec, horizon=horizon,
                                cfg=int_cfg)
    traj.to_csv(os.path.join(args.out, "best_trajectory.csv"))
    curves = analysis.normalize(traj, output, skip_cycles=ga_cfg.skip_cycles)
    loop = np.column_stack([curves[-1].x, curves[-1].y])
    np.savetxt(os.path.join(args.out, "best_loop.csv"), loop, delimiter=",",
               fmt="%.17g", header="x,y", comments="# ")

    report = [
        "drive_kind: %s" % kind,
        "output: %s" % output,
        "seed: %d" % ga_cfg.seed,
        "evaluations: %d" % result.evaluations,
        "best_cost: %.17g" % result.best_cost,
        "best_form_factor: %.17g" % -result.best_cost,
        "theta_star: " + ", ".join(
            "%s=%.17g" % (n, v)
            for n, v in zip(space.names, result.theta_star)),
        "per_cycle_form_factors: " + ", ".join(
            "%.6g" % f for f in result.cycle_form_factors),
        "cost_history: " + ", ".join(
            "%.6g" % c for c in result.cost_history),
    ]
    with open(os.path.join(args.out, "report.txt"), "w") as fh:
        fh.write("\n".join(report) + "\n")
    _write_manifest(args.out, cfg, time.time() - t0,
                    {"artifacts": ["report.txt", "best_trajectory.csv",
                                   "best_loop.csv"],
                     "jobs": jobs})
    print("\n".join(report))
    return EXIT_OK


def _sweep_point(task):
    """Run one grid point; returns a result row. Top level so it pickles."""
    cfg, overrides, opts = task
    row = dict(overrides)
    try:
        params = build_params(cfg)
        section = dict(cfg.get("drive") or {})
        section.update(overrides)
        point_cfg = dict(cfg)
        point_cfg["drive"] = section
        spec = build_drive(point_cfg)
        int_cfg = build_integrator(cfg)
        cycles = int((cfg.get("simulate") or {}).get("cycles", 1))
        horizon = (cycles + opts["skip_cycles"]) * drives.period(spec)
        traj = integrator.integrate(params, spec, horizon=horizon,
                                    cfg=int_cfg)
        metrics, mean_f, verdict, plateaus = _analyze_trajectory(traj, opts)
        row.update(status="ok", error="",
                   mean_form_factor=mean_f,
                   max_intersections=max(
                       (m.n_intersections for m in metrics), default=0),
                   storing=verdict,
                   n_plateaus=-1 if plateaus is None else plateaus.n_plateaus)
    except Exception as exc:  # record the failure, keep sweeping
        row.update(status="failed", error=str(exc).replace(",", ";"),
                   mean_form_factor=float("nan"), max_intersections=-1,
                   storing="", n_plateaus=-1)
    return row


def cmd_sweep(args) -> int:
    t0 = time.time()
    cfg = load_config(args.config)
    grid = (cfg.get("sweep") or {}).get("grid")
    if not grid:
        raise ConfigError("sweep requires sweep.grid with at least one axis")
    bad = set(grid) - set(DRIVE_KEYS)
    if bad:
        raise ConfigError("sweep axes must be drive parameters; got %s"
                          % ", ".join(sorted(bad)))
    opts = _analysis_opts(cfg, args)
    axes = sorted(grid)
    points = [dict(zip(axes, combo))
              for combo in itertools.product(*(grid[a] for a in axes))]
    tasks = [(cfg, overrides, opts) for overrides in points]
    jobs = args.jobs or os.cpu_count() or 1
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_point, tasks))
    else:
        rows = [_sweep_point(t) for t in tasks]

    os.makedirs(args.out, exist_ok=True)
    cols = axes + ["status", "mean_form_factor", "max_intersections",
                   "storing", "n_plateaus", "error"]
    with open(os.path.join(args.out, "sweep.csv"), "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(
                "%.17g" % row[c] if isinstance(row[c], float) else str(row[c])
                for c in cols) + "\n")
    n_fail = sum(r["status"] != "ok" for r in rows)
    _write_manifest(args.out, cfg, time.time() - t0,
                    {"artifacts": ["sweep.csv"], "grid_points": len(rows),
                     "failures": n_fail, "jobs": jobs})
    print("swept %d point(s), %d failure(s); wrote %s"
          % (len(rows), n_fail, os.path.join(args.out, "sweep.csv")))
    return EXIT_OK


def _verify_checks():
    """Canned oracle scenarios. Yields (name, passed, detail)."""
    params = model.OmParams()

    # Delta-kick loop area: cubic amplitude scaling of the simulated area
    # and the analytic decay of the closed form toward zero with kappa.
    base = analysis.verify_delta_pulse(model.OmParams(g_m=0.0), e0=1.0,
                                       t_s=2.0, sigma_fracs=(1 / 25, 1 / 50))
    doubled = analysis.verify_delta_pulse(model.OmParams(g_m=0.0), e0=2.0,
                                          t_s=2.0, sigma_fracs=(1 / 25, 1 / 50))
    ratio = doubled.areas_by_sigma[-1] / base.areas_by_sigma[-1]
    yield ("delta-kick cubic amplitude scaling",
           abs(ratio / 8.0 - 1.0) < 0.02,
           "area ratio %.4f for doubled amplitude (expect 8)" % ratio)
    analytic = [analysis.delta_pulse_analytic_area(
        model.OmParams(kappa=k, omega_m=20.0 * k, g_m=0.0), e0=1.0,
        t_s=2.0 / k) for k in (1.0, 0.1, 0.01)]
    yield ("delta-kick analytic area vanishes with kappa",
           analytic[0] > analytic[1] > analytic[2] > 0.0,
           "areas %.3g > %.3g > %.3g" % tuple(analytic))

    # Forced-oscillator identity on a single-loop hysteresis run.
    spec = drives.DriveSpec(kind="gaussian_train", e0=1e4, t_s=5.0, sigma=0.5)
    traj = integrator.integrate(params, spec,
                                horizon=2.0 * drives.period(spec))
    res = model.oscillator_residual_norm(traj, params)
    yield ("mechanical oscillator identity residual",
           res < 1e-4, "relative residual %.3g (tolerance 1e-4)" % res)

    # Non-local response integrals against the ODE observables.
    dev_phot, dev_phon = integrator.integral_representation_check(
        traj, params, spec)
    yield ("integral representation of photon number",
           dev_phot < 1e-3, "max relative deviation %.3g" % dev_phot)
    yield ("integral representation of phonon number",
           dev_phon < 1e-3, "max relative deviation %.3g" % dev_phon)


def cmd_verify(args) -> int:
    t0 = time.time()
    lines = []
    all_ok = True
    for name, ok, detail in _verify_checks():
        all_ok &= ok
        line = "%s: %s (%s)" % ("PASS" if ok else "FAIL", name, detail)
        lines.append(line)
        print(line)
    verdict = "all checks passed" if all_ok else "verification FAILED"
    lines.append(verdict)
    print(verdict)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "verify.txt"), "w") as fh:
            fh.write("\n".join(lines) + "\n")
        _write_manifest(args.out, None, time.time() - t0,
                        {"artifacts": ["verify.txt"], "passed": bool(all_ok)})
    return EXIT_OK if all_ok else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ompulse",
        description="Pulsed-cavity optomechanics memory simulator")
    parser.add_argument("--version", action="version",
                        version="ompulse %s" % __version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required,
                       help="YAML run configuration")
        p.add_argument("--out", default="out",
                       help="output directory (default: ./out)")
        p.add_argument("--jobs", type=int, default=None,
                       help="worker processes (default: all cores)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the optimizer seed")
        p.add_argument("--skip-cycles", type=int, default=None,
                       dest="skip_cycles",
                       help="transient cycles to drop before analysis")

    p = sub.add_parser("simulate", help="integrate one configured drive")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="loop metrics for a trajectory CSV")
    p.add_argument("trajectory", help="trajectory CSV from simulate")
    p.add_argument("--output", choices=("photon", "phonon"), default=None)
    common(p, config_required=False)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("optimize", help="GA search for maximal form factor")
    common(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", help="grid of drive parameters")
    p.add_argument("--output", choices=("photon", "phonon"), default=None)
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="built-in oracle checks")
    p.add_argument("--out", default=None,
                   help="optional directory for the verification report")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_VALIDATION
    except integrator.IntegrationError as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
