"""CSV artifact serialization and run metadata.

Schemas: snapshot = `x[,y],u`; metrics = `t,c,m_minus,m_plus,hausdorff,
profile_dist`; stability = `path_dist,sol_dist`.  Every file starts with a
comment line carrying the config hash.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

from .hjstep import Field


def config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, default=str)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _write_csv(path: str, header: str, rows: np.ndarray, chash: str):
    with open(path, "w") as f:
        f.write(f"# config_sha256={chash}\n")
        f.write(header + "\n")
        np.savetxt(f, rows, delimiter=",", fmt="%.17g")


def write_snapshot(path: str, field: Field, chash: str = ""):
    dom = field.domain
    centers = dom.lattice.cell_centers().reshape(-1, dom.dim)
    vals = field.values.reshape(-1, 1)
    mask = dom.mask.reshape(-1)
    rows = np.hstack([centers[mask], vals[mask]])
    header = "x,u" if dom.dim == 1 else "x,y,u"
    _write_csv(path, header, rows, chash)


def write_trajectory(out_dir: str, traj, chash: str = ""):
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for k, (t, f) in enumerate(traj):
        p = os.path.join(out_dir, f"snapshot_{k:03d}_t{t:.6f}.csv")
        write_snapshot(p, f, chash)
        paths.append(p)
    return paths


def write_metrics(path: str, reports, chash: str = ""):
    rows = []
    for snap in reports:
        for r in snap:
            rows.append([r.t, r.c, r.m_minus, r.m_plus, r.hausdorff,
                         r.profile_dist])
    _write_csv(path, "t,c,m_minus,m_plus,hausdorff,profile_dist",
               np.asarray(rows), chash)


def write_stability(path: str, path_dists, sol_dists, chash: str = ""):
    rows = np.stack([np.asarray(path_dists), np.asarray(sol_dists)], axis=-1)
    _write_csv(path, "path_dist,sol_dist", rows, chash)


def write_testfn_report(path: str, rows_by_scenario: dict, chash: str = ""):
    with open(path, "w") as f:
        f.write(f"# config_sha256={chash}\n")
        f.write("scenario,delta,eps,check,worst_violation,pass\n")
        for scenario, rows in rows_by_scenario.items():
            for (check, worst, tol, passed, ctx) in rows:
                dl = ctx.get("worst_delta", ctx.get("min_at_delta", ""))
                ep = ctx.get("worst_eps", "")
                f.write(f"{scenario},{dl},{ep},{check},{worst:.6e},"
                        f"{'true' if passed else 'false'}\n")


def write_metadata(path: str, config: dict, extra: dict | None = None):
    from . import __version__
    from .geometry import _AXIS_LAMBDA
    meta = {"config": config, "config_sha256": config_hash(config),
            "version": __version__, "psi_axis_lambda": _AXIS_LAMBDA}
    if extra:
        meta.update(extra)
    with open(path, "w") as f:
        json.dump(meta, f, indent=2, sort_keys=True, default=str)
    return meta["config_sha256"]


def write_summary(path: str, checks, config: dict) -> bool:
    """Machine-readable run summary; returns overall pass."""
    entries = []
    ok = True
    for c in checks:
        entries.append({"name": c.name, "passed": bool(c.passed),
                        "worst": float(c.worst), "tol": float(c.tol),
                        "details": c.details})
        ok = ok and bool(c.passed)
    out = {"config_sha256": config_hash(config), "passed": ok,
           "checks": entries}
    with open(path, "w") as f:
        json.dump(out, f, indent=2, sort_keys=True, default=str)
    return ok
