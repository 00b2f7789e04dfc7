"""Command-line entry point: config-driven runs and verification suites.

Subcommands: solve, verify {comparison,monotonicity,sandwich,stability,
modulus,testfn}, mcf, calibrate.  Config is YAML validated against a
published schema; artifacts are CSVs plus a JSON summary and metadata, all
embedding the config hash.  Exit codes: 0 all checks pass, 1 an enabled
assertion failed, 2 schema/config error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np
import yaml

from . import geometry as geo
from . import io as rio
from . import mcf as mcf_mod
from . import testfn as tf
from .convexcore import spec_from_config
from .hjstep import Field, field_from_function
from .parabstep import f_from_config
from .signal import DrivingPath, brownian_sample, constant_path, linear_path
from .solver import (CheckReport, RunControls, estimate_space_modulus,
                     estimate_stability_modulus, solve, verify_comparison,
                     verify_path_monotonicity, verify_sandwich,
                     verify_solution_bound)

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["experiment", "out_dir"],
    "properties": {
        "experiment": {"enum": ["solve", "verify", "mcf", "calibrate"]},
        "out_dir": {"type": "string"},
        "suite": {"enum": ["comparison", "monotonicity", "sandwich",
                            "stability", "modulus", "testfn"]},
        "seed": {"type": "integer"},
        "seeds": {"type": "integer", "minimum": 1},
        "domain": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["interval", "half_space", "disk",
                                   "rectangle", "strip_cylinder"]},
            },
        },
        "hamiltonians": {"type": "array",
                          "items": {"type": "object",
                                    "required": ["id"]}},
        "f": {"type": "object", "required": ["id"]},
        "path": {"type": "object", "required": ["kind"]},
        "initial": {"type": "object", "required": ["kind"]},
        "controls": {"type": "object"},
        "mcf": {"type": "object"},
        "scenario": {"type": "string"},
        "samples": {"type": "integer", "minimum": 1},
    },
}


class ConfigError(Exception):
    pass


def load_config(path: str) -> dict:
    try:
        with open(path) as f:
            cfg = yaml.safe_load(f)
    except Exception as e:
        raise ConfigError(f"cannot read config: {e}")
    import jsonschema
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as e:
        raise ConfigError(f"config schema violation at "
                          f"{'/'.join(map(str, e.path)) or '<root>'}: "
                          f"{e.message}")
    return cfg


def build_domain(entry: dict) -> geo.Domain:
    kind = entry["kind"]
    p = {k: v for k, v in entry.items() if k != "kind"}
    builders = {
        "interval": geo.interval,
        "half_space": geo.half_space,
        "disk": geo.disk,
        "rectangle": geo.rectangle,
        "strip_cylinder": geo.strip_cylinder,
    }
    try:
        return builders[kind](**p)
    except TypeError as e:
        raise ConfigError(f"domain parameters: {e}")


def build_path(entry: dict, seed_override=None) -> DrivingPath:
    kind = entry["kind"]
    if kind == "brownian":
        seed = seed_override if seed_override is not None \
            else entry.get("seed", 0)
        return brownian_sample(seed, entry["T"], entry["dt"],
                               m=entry.get("m", 1),
                               scale=entry.get("scale", 1.0))
    if kind == "csv":
        return DrivingPath.from_csv(entry["file"])
    if kind == "constant":
        return constant_path(entry["T"], m=entry.get("m", 1))
    if kind == "linear":
        return linear_path(entry["T"], entry.get("slope", 1.0))
    raise ConfigError(f"unknown path kind {kind!r}")


def build_initial(entry: dict, dom: geo.Domain) -> Field:
    kind = entry["kind"]
    if kind == "cone":
        c = np.atleast_1d(np.asarray(entry.get("center", 0.5)))
        s = entry.get("slope", 1.0)
        return field_from_function(
            dom, lambda p: s * np.linalg.norm(p - c[:dom.dim], axis=-1))
    if kind == "neg_cone":
        c = np.atleast_1d(np.asarray(entry.get("center", 0.5)))
        s = entry.get("slope", 1.0)
        return field_from_function(
            dom, lambda p: -s * np.linalg.norm(p - c[:dom.dim], axis=-1))
    if kind == "sine":
        k = entry.get("waves", 1.0)
        return field_from_function(
            dom, lambda p: np.sin(2 * np.pi * k * p[:, 0]))
    if kind == "constant":
        v = entry.get("value", 0.0)
        return field_from_function(dom, lambda p: np.full(p.shape[0], v))
    if kind == "random_lipschitz":
        seed = entry.get("seed", 0)
        lip = entry.get("lip", 1.0)
        return random_lipschitz_field(dom, seed, lip)
    raise ConfigError(f"unknown initial kind {kind!r}")


def random_lipschitz_field(dom: geo.Domain, seed: int, lip: float = 1.0,
                           waves: int = 3) -> Field:
    """Seeded random trigonometric field with Lipschitz constant about lip."""
    rng = np.random.default_rng(np.random.Philox(key=np.uint64(seed)))
    ks = rng.integers(1, 4, size=(waves, dom.dim))
    amps = rng.uniform(-1.0, 1.0, size=waves)
    phases = rng.uniform(0, 2 * np.pi, size=(waves, dom.dim))
    grad_bound = sum(abs(amps[w]) * 2 * np.pi * np.linalg.norm(ks[w])
                     for w in range(waves))
    scale = lip / max(grad_bound, 1e-12)

    def fn(p):
        out = np.zeros(p.shape[0])
        for w in range(waves):
            term = np.ones(p.shape[0])
            for ax in range(dom.dim):
                term = term * np.sin(2 * np.pi * ks[w, ax] * p[:, ax]
                                     + phases[w, ax])
            out += amps[w] * term
        return scale * out

    return field_from_function(dom, fn)


def build_controls(entry: dict) -> RunControls:
    entry = entry or {}
    return RunControls(
        output_times=entry.get("output_times"),
        path_refine=entry.get("path_refine", 0),
        cfl_safety=entry.get("cfl_safety", 0.9),
        h_then_f=entry.get("h_then_f", False),
        trotter_substeps=entry.get("trotter_substeps", 4),
        use_carry=entry.get("use_carry", True),
    )


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------


def run_solve(cfg: dict, out_dir: str, seed_override=None) -> list:
    dom = build_domain(cfg["domain"])
    spec = spec_from_config(cfg.get("hamiltonians", [{"id": "norm"}]))
    fs = f_from_config(cfg.get("f", {"id": "zero"}))
    path = build_path(cfg["path"], seed_override)
    u0 = build_initial(cfg.get("initial", {"kind": "cone"}), dom)
    controls = build_controls(cfg.get("controls"))
    traj = solve(u0, path, spec, fs, controls)
    chash = rio.config_hash(cfg)
    rio.write_trajectory(out_dir, traj, chash)
    bound = verify_solution_bound(u0, path, spec, fs, controls)
    return [bound]


def run_verify(cfg: dict, out_dir: str, seed_override=None) -> list:
    suite = cfg.get("suite")
    if suite is None:
        raise ConfigError("verify needs a `suite`")
    n_seeds = cfg.get("seeds", 20)
    chash = rio.config_hash(cfg)
    checks: list[CheckReport] = []

    if suite == "testfn":
        scenarios = ([cfg["scenario"]] if cfg.get("scenario")
                     else list(tf.SCENARIOS))
        n = cfg.get("samples", 1000)
        by_scenario = {}
        for sc in scenarios:
            rows = tf.certify_scenario(sc, n_samples=n,
                                       seed=cfg.get("seed", 0))
            by_scenario[sc] = rows
            for (check, worst, tol, passed, ctx) in rows:
                checks.append(CheckReport(f"{sc}.{check}", passed, worst,
                                          tol, ctx))
        rio.write_testfn_report(os.path.join(out_dir, "testfn_report.csv"),
                                by_scenario, chash)
        return checks

    dom = build_domain(cfg.get("domain", {"kind": "interval", "n": 256}))
    spec = spec_from_config(cfg.get("hamiltonians", [{"id": "norm"}]))
    fs = f_from_config(cfg.get("f", {"id": "zero"}))
    controls = build_controls(cfg.get("controls"))
    pcfg = cfg.get("path", {"kind": "brownian", "T": 0.25, "dt": 1.0 / 128})

    if suite == "comparison":
        for s in range(n_seeds):
            u0 = random_lipschitz_field(dom, 1000 + s)
            gap = random_lipschitz_field(dom, 2000 + s, lip=0.5)
            v0 = Field(dom, u0.values + np.abs(gap.values) + 0.1)
            path = build_path(pcfg, seed_override=s)
            checks.append(verify_comparison(u0, v0, path, spec, fs, controls))
    elif suite == "monotonicity":
        for s in range(n_seeds):
            u0 = random_lipschitz_field(dom, 1000 + s)
            z = build_path(pcfg, seed_override=s)
            ramp = np.linspace(0.0, cfg.get("ramp", 0.1), len(z.times))
            eta = DrivingPath(z.times, z.values + ramp[:, None])
            checks.append(verify_path_monotonicity(u0, z, eta, spec, fs,
                                                   controls))
    elif suite == "sandwich":
        for s in range(n_seeds):
            u0 = random_lipschitz_field(dom, 1000 + s)
            path = build_path(pcfg, seed_override=s)
            checks.append(verify_sandwich(u0, path, fs, controls, spec,
                                          residual=cfg.get("residual", 0.0)))
    elif suite == "modulus":
        for s in range(n_seeds):
            u0 = random_lipschitz_field(dom, 1000 + s)
            path = build_path(pcfg, seed_override=s)
            times = list(np.linspace(0, path.T, 6))
            ctrl = build_controls({**(cfg.get("controls") or {}),
                                   "output_times": times})
            traj = solve(u0, path, spec, fs, ctrl)
            checks.append(estimate_space_modulus(traj))
    elif suite == "stability":
        u0 = random_lipschitz_field(dom, cfg.get("seed", 0))
        base = build_path(pcfg, seed_override=cfg.get("seed", 0))
        amps = cfg.get("amplitudes")
        if amps is None:
            h = dom.lattice.h_max
            amps = list(np.geomspace(2 * h, 200 * h, 9))
        times = list(np.linspace(0, base.T, 5))
        ctrl = build_controls({**(cfg.get("controls") or {}),
                               "output_times": times})
        ref = solve(u0, base, spec, fs, ctrl)

        def run(a):
            pert = DrivingPath(
                base.times,
                base.values + np.where(base.times > 0, a, 0.0)[:, None])
            alt = solve(u0, pert, spec, fs, ctrl)
            sol_d = max(float(np.max(np.abs(f1.values - f2.values)))
                        for (_, f1), (_, f2) in zip(ref, alt))
            return a, sol_d

        rep = estimate_stability_modulus(run, amps)
        rio.write_stability(os.path.join(out_dir, "stability.csv"),
                            rep.details["path_dist"],
                            rep.details["sol_dist"], chash)
        with open(os.path.join(out_dir, "stability_fit.json"), "w") as f:
            json.dump({"slope": rep.details["slope"],
                       "intercept": rep.details["intercept"],
                       "config_sha256": chash}, f, indent=2)
        checks.append(rep)
    else:
        raise ConfigError(f"unknown suite {suite!r}")
    return checks


def run_mcf_experiment(cfg: dict, out_dir: str, seed_override=None) -> list:
    params = dict(cfg.get("mcf", {}))
    if seed_override is not None:
        params["seed"] = seed_override
    ccfg = mcf_mod.CylinderConfig(**params)
    controls = build_controls(cfg.get("controls"))
    if controls.output_times is None:
        controls.output_times = list(np.linspace(0.0, ccfg.T, 9))
    traj, reports, path = mcf_mod.run_mcf(ccfg, controls)
    chash = rio.config_hash(cfg)
    rio.write_trajectory(out_dir, traj, chash)
    rio.write_metrics(os.path.join(out_dir, "metrics.csv"), reports, chash)
    h_ax = traj.fields[0].domain.lattice.spacing[-1]
    checks = [
        mcf_mod.band_check(traj, path, ccfg),
        mcf_mod.width_monotone_check(reports, ccfg, h_ax),
        mcf_mod.profile_contraction_check(reports, path, ccfg),
    ]
    checks.extend(mcf_mod.one_d_reduction_check(ccfg, path))
    checks.append(mcf_mod.reduction_1d2d_check(ccfg))
    return checks


def run_calibrate(cfg: dict, out_dir: str) -> list:
    scenarios = ([cfg["scenario"]] if cfg.get("scenario")
                 else list(tf.SCENARIOS))
    rows = {}
    for sc in scenarios:
        rows[sc] = tf.calibrate_scenario(sc, n_samples=cfg.get("samples", 500),
                                         seed=cfg.get("seed", 0))
        print(f"{sc}: {rows[sc]}")
    with open(os.path.join(out_dir, "calibration.json"), "w") as f:
        json.dump(rows, f, indent=2)
    return [CheckReport("calibration", True, 0.0, 0.0, rows)]


# ---------------------------------------------------------------------------


def main(argv=None) -> int:
    threads = os.environ.get("ROUGHNEUMANN_THREADS")
    if threads:
        # cap the BLAS pools numpy uses; runs themselves are sequential
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)
    ap = argparse.ArgumentParser(
        prog="roughneumann",
        description="numerical laboratory for rough-signal Neumann problems")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("solve", "verify", "mcf", "calibrate"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)
        p.add_argument("--seed", type=int, default=None)
        if name == "verify":
            p.add_argument("--scenario", default=None)
    args = ap.parse_args(argv)

    try:
        cfg = load_config(args.config)
        if cfg["experiment"] != args.command:
            raise ConfigError(
                f"config experiment {cfg['experiment']!r} does not match "
                f"subcommand {args.command!r}")
        if getattr(args, "scenario", None):
            cfg["scenario"] = args.scenario
        out_dir = args.out or cfg["out_dir"]
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2

    os.makedirs(out_dir, exist_ok=True)
    try:
        if args.command == "solve":
            checks = run_solve(cfg, out_dir, args.seed)
        elif args.command == "verify":
            checks = run_verify(cfg, out_dir, args.seed)
        elif args.command == "mcf":
            checks = run_mcf_experiment(cfg, out_dir, args.seed)
        else:
            checks = run_calibrate(cfg, out_dir)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2

    rio.write_metadata(os.path.join(out_dir, "metadata.json"), cfg,
                       {"seed_override": args.seed})
    ok = rio.write_summary(os.path.join(out_dir, "summary.json"), checks, cfg)
    for c in checks:
        print(c.line())
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
