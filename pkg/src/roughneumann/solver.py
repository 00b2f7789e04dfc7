"""Path-driven operator-splitting solver and the verification harness that
turns the well-posedness statements into executable checks.

Lie splitting per path segment: CFL-sized F substeps over the segment's
duration, then the exact HJ increment with the segment's path increment.
Norm-component radii are accumulated in continuum across segments (per-run
carry) and rounded to whole cells only at application.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .convexcore import HamiltonianSpec
from .hjstep import Field, dilate, erode, hj_increment
from .parabstep import FSpec, cfl_dt, f_step
from .signal import DrivingPath


@dataclass
class RunControls:
    output_times: Optional[list] = None  # None: initial and final only
    path_refine: int = 0                 # breakpoint doublings before solving
    cfl_safety: float = 0.9
    h_then_f: bool = False               # swap the splitting order per segment
    trotter_substeps: int = 4
    use_carry: bool = True               # continuum radius accumulation

    def validate(self, T: float):
        if self.output_times is not None:
            ts = np.asarray(self.output_times, dtype=float)
            if np.any(ts < 0) or np.any(ts > T + 1e-12):
                raise ValueError("output times must lie in [0, T]")
        if self.cfl_safety <= 0 or self.cfl_safety > 1:
            raise ValueError("cfl_safety must lie in (0, 1]")


@dataclass
class Trajectory:
    times: list
    fields: list
    meta: dict = field(default_factory=dict)

    def final(self) -> Field:
        return self.fields[-1]

    def __iter__(self):
        return iter(zip(self.times, self.fields))


@dataclass
class CheckReport:
    name: str
    passed: bool
    worst: float
    tol: float
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: worst={self.worst:.3e} tol={self.tol:.3e}"


def solve(u0: Field, zeta: DrivingPath, spec: HamiltonianSpec, fs: FSpec,
          controls: RunControls) -> Trajectory:
    """Integrate du = F(D^2u, Du) dt + sum_i H^i(Du) d zeta^i."""
    controls.validate(zeta.T)
    path = zeta.refine(2**controls.path_refine) if controls.path_refine else zeta
    dom = u0.domain
    dt0 = cfl_dt(dom, fs, controls.cfl_safety)
    carry = (np.zeros((spec.m, max(1, dom.dim)))
             if controls.use_carry else None)

    pending = None
    if controls.output_times is not None:
        pending = sorted(float(t) for t in controls.output_times)

    times = [0.0]
    fields = [u0.copy()]
    cur = u0
    incs = path.increments()

    for k in range(len(path.times) - 1):
        seg = float(path.times[k + 1] - path.times[k])

        def f_phase(f):
            if fs.name == "zero":
                return f
            n = max(1, int(np.ceil(seg / dt0)))
            dt = seg / n
            out = f
            for _ in range(n):
                out = f_step(out, dt, fs)
            return out

        def h_phase(f):
            return hj_increment(f, incs[k], spec, carry=carry,
                                trotter_substeps=controls.trotter_substeps)

        if controls.h_then_f:
            cur = f_phase(h_phase(cur))
        else:
            cur = h_phase(f_phase(cur))

        if pending is not None:
            t_now = float(path.times[k + 1])
            # snapshots snap to the first breakpoint at or past each request
            while pending and pending[0] <= t_now + 1e-12:
                pending.pop(0)
                if abs(times[-1] - t_now) > 1e-15:
                    times.append(t_now)
                    fields.append(cur.copy())

    if abs(times[-1] - path.T) > 1e-12:
        times.append(path.T)
        fields.append(cur.copy())
    meta = {"m": spec.m, "f": fs.name, "segments": len(path.times) - 1,
            "h": dom.lattice.spacing, "snap_carry": controls.use_carry}
    return Trajectory(times, fields, meta)


# ---------------------------------------------------------------------------
# Verification operations
# ---------------------------------------------------------------------------


def verify_comparison(u0: Field, v0: Field, zeta: DrivingPath,
                      spec: HamiltonianSpec, fs: FSpec,
                      controls: RunControls, tol: float = 1e-12) -> CheckReport:
    """u0 <= v0 propagates to every snapshot (discrete comparison)."""
    gap0 = np.max(u0.values[u0.domain.mask] - v0.values[v0.domain.mask])
    if gap0 > 0:
        raise ValueError("verify_comparison needs u0 <= v0 pointwise")
    tu = solve(u0, zeta, spec, fs, controls)
    tv = solve(v0, zeta, spec, fs, controls)
    mask = u0.domain.mask
    worst = -np.inf
    sup_contract_ok = True
    sup0 = np.max(np.abs(u0.values[mask] - v0.values[mask]))
    for (t1, fu), (t2, fv) in zip(tu, tv):
        viol = float(np.max(fu.values[mask] - fv.values[mask]))
        worst = max(worst, viol)
        if np.max(np.abs(fu.values[mask] - fv.values[mask])) > sup0 + 1e-12:
            sup_contract_ok = False
    return CheckReport("comparison", worst <= tol and sup_contract_ok, worst,
                       tol, {"sup_contraction": sup_contract_ok})


def verify_path_monotonicity(u0: Field, zeta: DrivingPath, eta: DrivingPath,
                             spec: HamiltonianSpec, fs: FSpec,
                             controls: RunControls) -> CheckReport:
    """zeta - zeta(0) <= eta - eta(0) implies u_zeta <= u_eta + 2h
    (convex radial H, e.g. H = |p|)."""
    if not (spec.radial and spec.convex_each):
        raise ValueError("path monotonicity needs convex radial components")
    tgrid = np.union1d(zeta.times, eta.times)
    dz = zeta.eval(tgrid) - zeta.eval(0.0)
    de = eta.eval(tgrid) - eta.eval(0.0)
    if np.any(dz > de + 1e-12):
        raise ValueError("hypothesis violated: zeta - zeta0 > eta - eta0")
    h = u0.domain.lattice.h_max
    lip = max(u0.lipschitz(), 1e-12)
    tol = 2.0 * h * lip
    tu = solve(u0, zeta, spec, fs, controls)
    tv = solve(u0, eta, spec, fs, controls)
    mask = u0.domain.mask
    worst = -np.inf
    for (t1, fu), (t2, fv) in zip(tu, tv):
        worst = max(worst, float(np.max(fu.values[mask] - fv.values[mask])))
    return CheckReport("path_monotonicity", worst <= tol, worst, tol)


def verify_solution_bound(u0: Field, zeta: DrivingPath,
                          spec: HamiltonianSpec, fs: FSpec,
                          controls: RunControls,
                          slack: float = 1e-9) -> CheckReport:
    """|u(x,t) - sum_i H^i(0) zeta^i(t) - F(0,0) t| <= ||u0||_inf."""
    traj = solve(u0, zeta, spec, fs, controls)
    h0 = spec.H_at_zero()
    d = u0.domain.dim
    f00 = fs.F(np.zeros((d, d)), np.zeros(d))
    bound = u0.sup_norm()
    mask = u0.domain.mask
    worst = -np.inf
    for t, f in traj:
        drift = float(h0 @ zeta.eval(float(t))) + f00 * t
        dev = float(np.max(np.abs(f.values[mask] - drift)))
        worst = max(worst, dev - bound)
    return CheckReport("solution_bound", worst <= slack, worst, slack)


def verify_sandwich(u0: Field, xi: DrivingPath, fs: FSpec,
                    controls: RunControls, spec: HamiltonianSpec,
                    residual: float = 0.0) -> CheckReport:
    """S_H(xi(t)-min xi) S_F(t) S_-H(-min xi) u0 <= u(t)
       <= S_-H(max xi - xi(t)) S_F(t) S_H(max xi) u0,  H = |p|, m = 1."""
    if spec.m != 1 or not spec.components[0].name.startswith("norm"):
        raise ValueError("sandwich bounds need m = 1 and H = |p|")
    traj = solve(u0, xi, spec, fs, controls)
    mask = u0.domain.mask
    h = u0.domain.lattice.h_max
    lip = max(u0.lipschitz(), 1e-12)
    tol = 2.0 * h * lip + residual
    worst = -np.inf

    def s_f(f, t):
        if t <= 0 or fs.name == "zero":
            return f
        dt0 = cfl_dt(f.domain, fs, controls.cfl_safety)
        n = max(1, int(np.ceil(t / dt0)))
        out = f
        for _ in range(n):
            out = f_step(out, t / n, fs)
        return out

    for t, f in traj:
        if t == 0.0:
            continue
        mn, mx = xi.running_extrema(float(t))
        mn, mx = float(mn[0]), float(mx[0])
        x_t = float(xi.eval(float(t))[0])
        low = erode(u0, -mn) if mn < 0 else u0
        low = s_f(low, t)
        low = dilate(low, x_t - mn) if x_t - mn > 0 else low
        up = dilate(u0, mx) if mx > 0 else u0
        up = s_f(up, t)
        up = erode(up, mx - x_t) if mx - x_t > 0 else up
        lo_viol = float(np.max(low.values[mask] - f.values[mask]))
        hi_viol = float(np.max(f.values[mask] - up.values[mask]))
        worst = max(worst, lo_viol, hi_viol)
    return CheckReport("sandwich", worst <= tol, worst, tol)


# ---------------------------------------------------------------------------
# Refinement and moduli
# ---------------------------------------------------------------------------


def _restrict_to(coarse: Field, fine: Field) -> np.ndarray:
    """Fine field sampled (linearly) at the coarse cell centers."""
    cd, fd = coarse.domain, fine.domain
    vals = fine.values
    out = vals
    for ax in range(cd.dim):
        cx = cd.lattice.axis_centers(ax)
        fx = fd.lattice.axis_centers(ax)
        out = np.apply_along_axis(
            lambda col: np.interp(cx, fx, col), ax, out)
    return out


def refine_until_cauchy(problem: Callable, levels: int = 3,
                        min_factor: float = 1.5) -> CheckReport:
    """problem(level) -> Field solves on grid h/2^level with 2^level-fold
    path refinement; reports sup distances between consecutive levels."""
    if levels < 3:
        raise ValueError("need at least 3 refinement levels")
    fields = [problem(lv) for lv in range(levels)]
    dists = []
    for lv in range(levels - 1):
        coarse, fine = fields[lv], fields[lv + 1]
        interp = _restrict_to(coarse, fine)
        mask = coarse.domain.mask
        dists.append(float(np.max(np.abs(interp[mask] - coarse.values[mask]))))
    ratios = [dists[i] / max(dists[i + 1], 1e-300)
              for i in range(len(dists) - 1)]
    ok = all(r >= min_factor for r in ratios)
    return CheckReport("refine_cauchy", ok, min(ratios) if ratios else 0.0,
                       min_factor, {"dists": dists, "ratios": ratios})


def estimate_space_modulus(traj: Trajectory) -> CheckReport:
    """Discrete Lipschitz constant over snapshots vs 1.1 x Lip(u0)."""
    lip0 = traj.fields[0].lipschitz()
    worst = max(f.lipschitz() for _, f in traj)
    tol = 1.1 * max(lip0, 1e-12)
    return CheckReport("space_modulus", worst <= tol, worst, tol,
                       {"lip0": lip0})


def estimate_stability_modulus(run: Callable, amplitudes) -> CheckReport:
    """run(a) -> (path_dist, sol_dist); log-log least squares slope.

    Passes when the fitted slope >= 0.5 and sol_dist is nonincreasing as the
    amplitude decreases.
    """
    rows = [run(float(a)) for a in amplitudes]
    pd = np.array([r[0] for r in rows])
    sd = np.array([r[1] for r in rows])
    if np.any(pd <= 0) or np.any(sd <= 0):
        raise ValueError("degenerate family: nonpositive distance")
    if pd.max() / pd.min() < 50:
        raise ValueError("degenerate family: need >= 2 decades of path_dist")
    order = np.argsort(pd)
    mono_ok = bool(np.all(np.diff(sd[order]) >= -1e-12))
    A = np.stack([np.log(pd), np.ones_like(pd)], axis=1)
    slope, intercept = np.linalg.lstsq(A, np.log(sd), rcond=None)[0]
    ok = slope >= 0.5 and mono_ok
    return CheckReport("stability_modulus", bool(ok), float(slope), 0.5,
                       {"slope": float(slope), "intercept": float(intercept),
                        "path_dist": pd.tolist(), "sol_dist": sd.tolist(),
                        "monotone": mono_ok})
