"""Stochastically perturbed mean-curvature level-set flow in a strip with
right-angle contact: band tracking, monotone-profile fitting, level-set
metrics, the 1d reduction checks, and the engineered hole-filling probe.

Axis convention: the strip is D x [x_min, x_max] with D = [0, 1] on lattice
axis 0 and the unbounded coordinate x_n on lattice axis 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import geometry as geo
from .convexcore import make_spec, norm_hamiltonian
from .hjstep import Field, field_from_function
from .parabstep import mcf_f
from .signal import DrivingPath, brownian_sample, oscillation
from .solver import CheckReport, RunControls, Trajectory, solve


@dataclass
class CylinderConfig:
    a: float = 0.0
    b: float = 0.3
    alpha: float = 0.0
    beta: float = 0.3
    n_cross: int = 128
    n_axis: int = 512
    seed: int = 0
    T: float = 0.1
    dt: float = 2e-4
    scale: float = 1.4            # Brownian scale sigma_B
    axis_pad: Optional[float] = None  # default 4 * scale * sqrt(T)
    wiggle_amp: float = 0.0       # x'-dependent perturbation of u0
    dip_depth: float = 0.0        # interior dip in the axis profile
    levels: tuple = ()            # metric levels c; default quartiles

    def __post_init__(self):
        if not (self.alpha < self.beta and self.a < self.b):
            raise ValueError("need alpha < beta and a < b")
        if not self.levels:
            d = self.beta - self.alpha
            self.levels = (self.alpha + 0.25 * d, self.alpha + 0.5 * d,
                           self.alpha + 0.75 * d)

    @property
    def pad(self) -> float:
        if self.axis_pad is not None:
            return self.axis_pad
        rng_pad = 4.0 * self.scale * np.sqrt(self.T)
        # prefer an isotropic lattice (h_axis = h_cross): whole-cell radii
        # then translate the band exactly along the axis
        iso_pad = 0.5 * (self.n_axis / self.n_cross - (self.b - self.a))
        return iso_pad if iso_pad >= rng_pad else rng_pad

    def domain(self) -> geo.Domain:
        return geo.strip_cylinder(self.a - self.pad, self.b + self.pad,
                                  self.n_cross, self.n_axis)

    def path(self) -> DrivingPath:
        return brownian_sample(self.seed, self.T, self.dt, m=1,
                               scale=self.scale)


def ramp_profile(cfg: CylinderConfig, xn: np.ndarray) -> np.ndarray:
    t = np.clip((xn - cfg.a) / (cfg.b - cfg.a), 0.0, 1.0)
    return cfg.alpha + (cfg.beta - cfg.alpha) * t


def initial_field(cfg: CylinderConfig, domain: Optional[geo.Domain] = None) -> Field:
    """Band ramp, optionally with an x'-dependent wiggle and an axial dip,
    both supported strictly inside the band."""
    dom = domain or cfg.domain()

    def u0(pts):
        xq, xn = pts[:, 0], pts[:, 1]
        base = ramp_profile(cfg, xn)
        mid = 0.5 * (cfg.a + cfg.b)
        w = cfg.b - cfg.a
        bump = np.cos(np.clip((xn - mid) / (0.35 * w), -1, 1) * np.pi * 0.5) ** 2
        inside = (np.abs(xn - mid) < 0.35 * w).astype(float)
        out = base
        if cfg.wiggle_amp:
            # cos mode: compatible with the right-angle contact condition
            out = out + cfg.wiggle_amp * np.cos(2 * np.pi * xq) * bump * inside
        if cfg.dip_depth:
            out = out - cfg.dip_depth * bump * inside
        return np.clip(out, cfg.alpha, cfg.beta)

    return field_from_function(dom, u0)


@dataclass
class LevelSetReport:
    t: float
    c: float
    m_minus: float
    m_plus: float
    hausdorff: float
    profile_dist: float


# ---------------------------------------------------------------------------
# Profile fitting and level-set metrics
# ---------------------------------------------------------------------------


def fit_monotone_profile(f: Field, xi_t: float = 0.0):
    """Best nondecreasing function of x_n in sup norm.

    Fits the L-infinity optimal isotonic envelope of the axis-averaged slice
    (half the running max plus the reverse running min); the distance is the
    sup over the whole slice of |u - v_hat(x_n)|.
    """
    v = f.values
    ubar = v.mean(axis=0) if v.ndim == 2 else v
    upper = np.maximum.accumulate(ubar)
    lower = np.minimum.accumulate(ubar[::-1])[::-1]
    vhat = 0.5 * (upper + lower)
    diff = v - (vhat[None, :] if v.ndim == 2 else vhat)
    return vhat, float(np.max(np.abs(diff)))


def _crossing_mask_1d(profile: np.ndarray, c: float, tol: float) -> np.ndarray:
    near = np.abs(profile - c) <= tol
    sign = np.sign(profile - c)
    flip = np.zeros_like(near)
    flip[:-1] |= sign[:-1] * sign[1:] < 0
    flip[1:] |= sign[:-1] * sign[1:] < 0
    return near | flip


def level_set_cells(f: Field, c: float) -> np.ndarray:
    """Cells where u - c changes sign along an axis or |u - c| <= h Lip."""
    v = f.values
    lip = max(f.lipschitz(), 1e-12)
    # value-proximity tolerance along the structural (last) axis
    tol = f.domain.lattice.spacing[-1] * lip
    near = np.abs(v - c) <= tol
    sign = np.sign(v - c)
    out = near.copy()
    for ax in range(v.ndim):
        sl_a = [slice(None)] * v.ndim
        sl_b = [slice(None)] * v.ndim
        sl_a[ax] = slice(1, None)
        sl_b[ax] = slice(None, -1)
        flip = sign[tuple(sl_a)] * sign[tuple(sl_b)] < 0
        out[tuple(sl_a)] |= flip
        out[tuple(sl_b)] |= flip
    return out


def _hausdorff(A: np.ndarray, B: np.ndarray) -> float:
    """Brute-force double sup over point sets (N,d), (M,d)."""
    if len(A) == 0 or len(B) == 0:
        return np.inf
    d2 = np.sum((A[:, None, :] - B[None, :, :]) ** 2, axis=-1)
    return float(max(np.sqrt(d2.min(axis=1)).max(),
                     np.sqrt(d2.min(axis=0)).max()))


def level_set_metrics(f: Field, c: float, vhat: np.ndarray,
                      xi_t: float = 0.0) -> LevelSetReport:
    dom = f.domain
    cells = level_set_cells(f, c)
    centers = dom.lattice.cell_centers()
    if not np.any(cells):
        return LevelSetReport(np.nan, c, np.nan, np.nan, np.nan, np.nan)
    pts = centers[cells]
    xn = pts[:, -1]
    m_minus, m_plus = float(xn.min()), float(xn.max())
    axis = dom.lattice.axis_centers(dom.dim - 1)
    lip1 = max(np.max(np.abs(np.diff(vhat))) / dom.lattice.spacing[-1], 1e-12)
    cross = _crossing_mask_1d(vhat, c, dom.lattice.spacing[-1] * lip1)
    if np.any(cross):
        vband = axis[cross]
        if dom.dim == 2:
            cr = dom.lattice.axis_centers(0)
            V = np.stack(np.meshgrid(cr, vband, indexing="ij"),
                         axis=-1).reshape(-1, 2)
        else:
            V = vband[:, None]
        hd = _hausdorff(pts, V)
    else:
        hd = np.inf
    return LevelSetReport(np.nan, c, m_minus, m_plus, hd, np.nan)


# ---------------------------------------------------------------------------
# The experiment
# ---------------------------------------------------------------------------


def count_oscillation_events(path: DrivingPath, size: float) -> int:
    """Greedy count of disjoint intervals with oscillation >= size."""
    events = 0
    start = 0.0
    for t in path.times[1:]:
        if float(oscillation(path, start, float(t))[0]) >= size:
            events += 1
            start = float(t)
    return events


def run_mcf(cfg: CylinderConfig, controls: Optional[RunControls] = None,
            n_snapshots: int = 9):
    """Solve the perturbed-MCF level-set equation and stream level metrics.

    Returns (trajectory, reports, path) where reports[k] is the list of
    LevelSetReport rows for snapshot k.
    """
    dom = cfg.domain()
    path = cfg.path()
    mn, mx = path.running_extrema(path.T)
    h_ax = dom.lattice.spacing[-1]
    lo_needed = cfg.a - float(mx[0]) - 2 * h_ax
    hi_needed = cfg.b - float(mn[0]) + 2 * h_ax
    if lo_needed < dom.lattice.origin[1] or hi_needed > \
            dom.lattice.origin[1] + dom.lattice.shape[1] * h_ax:
        raise ValueError(
            "band exits window; widen axis_pad to >= "
            f"{max(float(mx[0]), -float(mn[0])) + 4 * h_ax:.3f}")
    if controls is None:
        controls = RunControls()
    if controls.output_times is None:
        from dataclasses import replace as _rep
        controls = _rep(controls,
                        output_times=list(np.linspace(0.0, cfg.T, n_snapshots)))
    u0 = initial_field(cfg, dom)
    spec = make_spec(norm_hamiltonian())
    traj = solve(u0, path, spec, mcf_f(sigma_reg=dom.lattice.h_min), controls)
    reports = []
    for t, f in traj:
        xi_t = float(path.eval(float(t))[0])
        vhat, pdist = fit_monotone_profile(f, xi_t)
        rows = []
        for c in cfg.levels:
            r = level_set_metrics(f, c, vhat, xi_t)
            rows.append(LevelSetReport(float(t), c, r.m_minus, r.m_plus,
                                       r.hausdorff, pdist))
        reports.append(rows)
    traj.meta.update({"seed": cfg.seed, "scale": cfg.scale,
                      "events": count_oscillation_events(
                          path, 0.5 * (cfg.b - cfg.a))})
    return traj, reports, path


def band_check(traj: Trajectory, path: DrivingPath,
               cfg: CylinderConfig) -> CheckReport:
    """u = alpha below a - xi(t) and u = beta above b - xi(t), within 2h."""
    dom = traj.fields[0].domain
    axis = dom.lattice.axis_centers(dom.dim - 1)
    h = dom.lattice.spacing[-1]
    lip0 = max(traj.fields[0].lipschitz(), 1.0)
    tol = 2.0 * h * lip0
    worst = 0.0
    for t, f in traj:
        xi = float(path.eval(float(t))[0])
        lo = axis <= cfg.a - xi - h
        hi = axis >= cfg.b - xi + h
        if np.any(lo):
            worst = max(worst, float(np.max(np.abs(
                f.values[..., lo] - cfg.alpha))))
        if np.any(hi):
            worst = max(worst, float(np.max(np.abs(
                f.values[..., hi] - cfg.beta))))
    return CheckReport("mcf_band", worst <= tol, worst, tol)


def width_monotone_check(reports, cfg: CylinderConfig,
                         h_axis: float) -> CheckReport:
    """m+ - m- nonincreasing in t for each level, within 2h."""
    tol = 2.0 * h_axis
    worst = -np.inf
    for ci in range(len(cfg.levels)):
        widths = [rows[ci].m_plus - rows[ci].m_minus for rows in reports]
        for w0, w1 in zip(widths[:-1], widths[1:]):
            worst = max(worst, w1 - w0)
    return CheckReport("mcf_width_monotone", worst <= tol, worst, tol)


def profile_contraction_check(reports, path: DrivingPath,
                              cfg: CylinderConfig) -> CheckReport:
    """Monotone-profile distance nonincreasing across checkpoints after the
    first oscillation event of size (b-a)/2, within 2h."""
    h = (cfg.b + cfg.pad - (cfg.a - cfg.pad)) / cfg.n_axis
    tol = 2.0 * h
    t_star = None
    for t in path.times[1:]:
        if float(oscillation(path, 0.0, float(t))[0]) >= 0.5 * (cfg.b - cfg.a):
            t_star = float(t)
            break
    if t_star is None:
        return CheckReport("mcf_profile_contraction", False, np.inf, tol,
                           {"note": "oscillation never reached (b-a)/2"})
    dists = [rows[0].profile_dist for rows in reports]
    times = [rows[0].t for rows in reports]
    worst = -np.inf
    for k in range(len(dists) - 1):
        if times[k] >= t_star:
            worst = max(worst, dists[k + 1] - dists[k])
    return CheckReport("mcf_profile_contraction", worst <= tol, worst, tol,
                       {"t_star": t_star, "dists": dists})


# ---------------------------------------------------------------------------
# 1d reduction
# ---------------------------------------------------------------------------


def one_d_domain(cfg: CylinderConfig) -> geo.Domain:
    return geo.interval(cfg.a - cfg.pad, cfg.b + cfg.pad, cfg.n_axis)


def one_d_initial(cfg: CylinderConfig, dom: geo.Domain) -> Field:
    def u0(pts):
        xn = pts[:, 0]
        base = ramp_profile(cfg, xn)
        mid = 0.5 * (cfg.a + cfg.b)
        w = cfg.b - cfg.a
        bump = np.cos(np.clip((xn - mid) / (0.35 * w), -1, 1) * np.pi * 0.5) ** 2
        inside = (np.abs(xn - mid) < 0.35 * w).astype(float)
        return np.clip(base - cfg.dip_depth * bump * inside,
                       cfg.alpha, cfg.beta)
    return field_from_function(dom, u0)


def one_d_reduction_check(cfg: CylinderConfig, path: DrivingPath,
                          controls: Optional[RunControls] = None):
    """Checks on the x'-independent reduction v(r, t):

    (i) v(., t_hat) nondecreasing at the first time the oscillation reaches
    (b-a)/2;  (ii) the window max/min formula at t_hat against the running
    extrema;  (iii) the translation law v(r,t) = v(r + xi(t)-xi(t_hat),
    t_hat) for t >= t_hat.  Each within 2h.
    """
    dom = one_d_domain(cfg)
    h = dom.lattice.h_min
    u0 = one_d_initial(cfg, dom)
    spec = make_spec(norm_hamiltonian())
    fs = mcf_f(sigma_reg=h)
    half = 0.5 * (cfg.b - cfg.a)

    t_hat = None
    for t in path.times[1:]:
        if float(oscillation(path, 0.0, float(t))[0]) >= half:
            t_hat = float(t)
            break
    if t_hat is None:
        return [CheckReport("1d_reduction", False, np.inf, 2 * h,
                            {"note": "hypothesis unmet: oscillation too small"})]

    from dataclasses import replace as _rep
    base_ctrl = controls or RunControls()
    ctrl = _rep(base_ctrl, output_times=sorted(set(
        [t_hat] + list(np.linspace(t_hat, path.T, 4)))))
    traj = solve(u0, path, spec, fs, ctrl)
    snap = {round(t, 12): f for t, f in traj}
    # solve snaps outputs to breakpoints at or after the request
    t_keys = sorted(snap.keys())
    t_hat_key = min(k for k in t_keys if k >= t_hat - 1e-12)
    v_hat_t = snap[t_hat_key].values
    axis = dom.lattice.axis_centers(0)
    reports = []

    # (i) nondecreasing at t_hat
    run_max = np.maximum.accumulate(v_hat_t)
    worst_i = float(np.max(run_max - v_hat_t))
    reports.append(CheckReport("1d_nondecreasing_at_that", worst_i <= 2 * h,
                               worst_i, 2 * h))

    # (ii) window formula: dilation (running max at t_hat) or erosion case
    mn, mx = path.running_extrema(t_hat_key)
    xi_that = float(path.eval(t_hat_key)[0])
    ts = [float(t) for t in path.times if t <= t_hat_key + 1e-12]
    vals = [float(path.eval(t)[0]) for t in ts]
    if abs(xi_that - float(mx[0])) <= abs(xi_that - float(mn[0])):
        t_star = ts[int(np.argmin(vals))]
        window_op = "max"
    else:
        t_star = ts[int(np.argmax(vals))]
        window_op = "min"
    ctrl2 = RunControls(output_times=[t_star])
    traj2 = solve(u0, path, spec, fs, ctrl2)
    v_star = None
    for t, f in traj2:
        if t >= t_star - 1e-12 and v_star is None:
            v_star = f.values
    # the breakpoint t_hat overshoots the exact oscillation time, so the
    # window radius is the rise actually achieved between t_star and t_hat
    radius = abs(xi_that - float(path.eval(t_star)[0]))
    k = int(np.floor(radius / h + 0.5))
    from scipy.ndimage import maximum_filter1d, minimum_filter1d
    filt = maximum_filter1d if window_op == "max" else minimum_filter1d
    pred = filt(v_star, size=2 * k + 1, mode="nearest")
    worst_ii = float(np.max(np.abs(pred - v_hat_t)))
    reports.append(CheckReport("1d_window_formula", worst_ii <= 2 * h,
                               worst_ii, 2 * h, {"op": window_op}))

    # (iii) translation law after t_hat
    worst_iii = 0.0
    for t, f in traj:
        if t <= t_hat_key + 1e-12:
            continue
        shift = float(path.eval(float(t))[0]) - xi_that
        target = np.interp(axis + shift, axis, v_hat_t,
                           left=np.nan, right=np.nan)
        ok = ~np.isnan(target)
        worst_iii = max(worst_iii,
                        float(np.max(np.abs(f.values[ok] - target[ok]))))
    reports.append(CheckReport("1d_translation_law", worst_iii <= 2 * h,
                               worst_iii, 2 * h))
    return reports


def reduction_1d2d_check(cfg: CylinderConfig,
                         controls: Optional[RunControls] = None) -> CheckReport:
    """x'-independent data: the 2d strip run agrees with the 1d run within 2h.

    Uses a gentle axial dip (curvature within the directional stencil's
    consistent regime); steep kinks along degenerate critical lines are
    rounded by the scheme at its stencil scale and belong to the 1d checks,
    where the transport operators are exact.
    """
    cfg1 = CylinderConfig(**{**cfg.__dict__, "wiggle_amp": 0.0,
                             "dip_depth": min(cfg.dip_depth, 0.05),
                             "levels": cfg.levels})
    dom2 = cfg1.domain()
    path = cfg1.path()
    u0_2 = initial_field(cfg1, dom2)
    spec = make_spec(norm_hamiltonian())
    ctrl = controls or RunControls()
    traj2 = solve(u0_2, path, spec, mcf_f(sigma_reg=dom2.lattice.h_min), ctrl)
    dom1 = one_d_domain(cfg1)
    u0_1 = one_d_initial(cfg1, dom1)
    traj1 = solve(u0_1, path, spec, mcf_f(sigma_reg=dom1.lattice.h_min), ctrl)
    h = dom1.lattice.h_min
    worst = 0.0
    for (t2, f2), (t1, f1) in zip(traj2, traj1):
        slice2 = f2.values.mean(axis=0)
        xdep = np.max(f2.values, axis=0) - np.min(f2.values, axis=0)
        worst = max(worst, float(np.max(np.abs(slice2 - f1.values))),
                    float(np.max(xdep)))
    return CheckReport("1d2d_reduction", worst <= 2 * h, worst, 2 * h)


# ---------------------------------------------------------------------------
# Hole-filling probe
# ---------------------------------------------------------------------------


def hole_fill_probe(r: float = 0.3, rise: float = 2.0, eps_event: float = 0.1,
                    n_cross: int = 64, n_axis: int = 384) -> list:
    """Engineered path: dip to -eps_event, then rise by `rise`.

    Initial data: band ramp with a c-superlevel ball of radius r centered
    mid-band.  Verifies (a) u(., t+h) > c on {x_n >= y_n - r/2 - rise} within
    tolerance, and (b) the level-width drop
    (m+ - m-)(t+h) <= (m+ - m-)(t) - r/2 + 4h.
    """
    a, b = -0.2, 0.6
    alpha, beta = 0.0, 0.8
    c = 0.6
    y_n = 0.0
    h_probe = r * r / 16.0
    pad = rise + 1.0
    dom = geo.strip_cylinder(a - pad, b + 0.8, n_cross, n_axis)
    h_ax = dom.lattice.spacing[-1]

    # plateau well above c and a wide shell keep the fat-cell detector
    # (|u - c| <= h Lip) away from the plateau
    bump_top = c + 0.5 * (beta - c)
    shell = 0.2

    def u0(pts):
        xn = pts[:, 1]
        base = np.clip(alpha + (beta - alpha) * (xn - a) / (b - a),
                       alpha, beta)
        dist = np.linalg.norm(pts - np.array([0.5, y_n]), axis=-1)
        decay = np.clip((r + shell - dist) / shell, 0.0, 1.0)
        return np.maximum(base, bump_top * decay)

    f0 = field_from_function(dom, u0)
    times = np.array([0.0, h_probe / 2, h_probe])
    vals = np.array([[0.0], [-eps_event], [rise - eps_event]])
    path = DrivingPath(times, vals)
    spec = make_spec(norm_hamiltonian())
    traj = solve(f0, path, spec, mcf_f(sigma_reg=dom.lattice.h_min),
                 RunControls())
    f1 = traj.final()
    net = rise - eps_event

    centers = dom.lattice.cell_centers()
    region = centers[..., 1] >= y_n - r / 2 - net + 2 * h_ax
    lip = max(f0.lipschitz(), 1.0)
    tol = 2.0 * h_ax * lip
    worst = float(np.max(np.maximum(c - f1.values[region], 0.0)))
    rep_a = CheckReport("hole_fill_region", worst <= tol, worst, tol)

    w0 = level_set_metrics(f0, c, fit_monotone_profile(f0)[0])
    w1 = level_set_metrics(f1, c, fit_monotone_profile(f1)[0])
    drop_needed = (w0.m_plus - w0.m_minus) - r / 2 + 4 * h_ax
    got = w1.m_plus - w1.m_minus
    rep_b = CheckReport("hole_fill_width_drop", got <= drop_needed,
                        got - drop_needed, 0.0,
                        {"width_before": w0.m_plus - w0.m_minus,
                         "width_after": got})
    return [rep_a, rep_b]
