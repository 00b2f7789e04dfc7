"""Explicit monotone step for du = F(D^2 u, Du) dt with homogeneous Neumann
conditions (ghost-cell mirroring) on box-shaped lattices.

Non-geometric F: one explicit Euler step with central differences, monotone
under the CFL restriction dt <= h^2/(2 d Lambda) for the shipped linear
nonlinearities.

Geometric F (level-set type, F(lam X + mu p x p, lam p) = lam F(X, p)): the
central quasilinear evaluation is not discretely monotone (the projection
matrix depends on the discrete gradient), so the step instead uses a
directional min-max pair scheme: probes u at x +/- s e over 8 unit
directions via bilinear interpolation and averages the best ordered pair,

    M(u) = 1/2 [ max_e min(u(x+se), u(x-se)) + min_e max(u(x+se), u(x-se)) ],
    u_new = (1 - lam) u + lam M(u),   lam = dt / (s^2/2),  s = 2 h_max.

M - u consistently estimates (s^2/2) times the second derivative along the
level line, the convex combination is monotone by construction, constants
and affine data are fixed points, and monotone profiles of one coordinate
are preserved exactly.  In one dimension the geometric nonlinearity
vanishes identically away from p = 0, so the геometric step is the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .geometry import Domain
from .hjstep import Field

_N_DIRECTIONS = 8  # pair directions at angles k*pi/8


@dataclass(frozen=True)
class FSpec:
    """Degenerate elliptic nonlinearity F(X, p) with metadata.

    evaluator: F(X, p) -> float for X (d,d) symmetric, p (d,).
    vector_evaluator: optional batched form F(Xs (N,d,d), ps (N,d)) -> (N,).
    """

    name: str
    evaluator: Callable
    lam: float  # ellipticity bound Lambda for the CFL condition
    geometric: bool = False
    sigma_reg: Optional[float] = None  # default h at use
    vector_evaluator: Optional[Callable] = None
    params: dict = field(default_factory=dict)

    def F(self, X: np.ndarray, p: np.ndarray) -> float:
        return float(self.evaluator(np.asarray(X, dtype=float), np.asarray(p, dtype=float)))


def zero_f() -> FSpec:
    return FSpec("zero", lambda X, p: 0.0, lam=1.0,
                 vector_evaluator=lambda Xs, ps: np.zeros(Xs.shape[0]))


def heat_f(coef: float = 1.0) -> FSpec:
    def ev(X, p):
        return coef * np.trace(X)

    def vec(Xs, ps):
        return coef * np.trace(Xs, axis1=-2, axis2=-1)

    return FSpec("heat", ev, lam=coef, vector_evaluator=vec,
                 params={"coef": coef})


def mcf_f(sigma_reg: Optional[float] = None) -> FSpec:
    """Level-set mean curvature nonlinearity
    tr[(Id - p x p / (|p|^2 + sigma^2)) X] with the gradient regularized by
    sigma (used by the evaluator and the certification checks)."""

    def ev(X, p, sigma=sigma_reg):
        s = 1e-6 if sigma is None else sigma
        d = len(p)
        nrm2 = float(p @ p) + s**2
        A = np.eye(d) - np.outer(p, p) / nrm2
        return float(np.sum(A * X))

    return FSpec("mcf", ev, lam=1.0, geometric=True, sigma_reg=sigma_reg)


_F_FACTORIES = {
    "zero": lambda params: zero_f(),
    "heat": lambda params: heat_f(**params),
    "mcf": lambda params: mcf_f(**params),
}


def f_from_config(entry) -> FSpec:
    fid = entry["id"]
    if fid not in _F_FACTORIES:
        raise ValueError(f"unknown F id: {fid!r}")
    return _F_FACTORIES[fid](entry.get("params", {}))


def cfl_dt(domain: Domain, fs: FSpec, safety: float = 0.9) -> float:
    h = domain.lattice.h_min
    return safety * h * h / (2.0 * domain.dim * fs.lam)


def _require_box(domain: Domain):
    if not domain.is_box:
        raise ValueError("f_step supports box-shaped lattices (interval, "
                         "rectangle, strip, aligned half-space windows)")


def _mirror_pad(v: np.ndarray, w: int) -> np.ndarray:
    """Cell-centered mirror: ghost j=-1 copies j=0 etc. (homogeneous Neumann)."""
    return np.pad(v, w, mode="symmetric")


# -- central-difference path -------------------------------------------------


def _central_step(f: Field, dt: float, fs: FSpec) -> Field:
    dom = f.domain
    h = dom.lattice.spacing
    v = f.values
    d = dom.dim
    p = _mirror_pad(v, 1)
    if d == 1:
        grad = (p[2:] - p[:-2]) / (2 * h[0])
        hess = (p[2:] - 2 * v + p[:-2]) / h[0] ** 2
        Xs = hess.reshape(-1, 1, 1)
        ps = grad.reshape(-1, 1)
    else:
        gx = (p[2:, 1:-1] - p[:-2, 1:-1]) / (2 * h[0])
        gy = (p[1:-1, 2:] - p[1:-1, :-2]) / (2 * h[1])
        hxx = (p[2:, 1:-1] - 2 * v + p[:-2, 1:-1]) / h[0] ** 2
        hyy = (p[1:-1, 2:] - 2 * v + p[1:-1, :-2]) / h[1] ** 2
        hxy = (p[2:, 2:] - p[2:, :-2] - p[:-2, 2:] + p[:-2, :-2]) / (4 * h[0] * h[1])
        n = v.size
        Xs = np.empty((n, 2, 2))
        Xs[:, 0, 0] = hxx.ravel()
        Xs[:, 1, 1] = hyy.ravel()
        Xs[:, 0, 1] = Xs[:, 1, 0] = hxy.ravel()
        ps = np.stack([gx.ravel(), gy.ravel()], axis=-1)
    if fs.vector_evaluator is not None:
        rhs = np.asarray(fs.vector_evaluator(Xs, ps))
    else:
        rhs = np.array([fs.evaluator(Xs[i], ps[i]) for i in range(Xs.shape[0])])
    return Field(dom, v + dt * rhs.reshape(v.shape))


# -- geometric min-max path ---------------------------------------------------


_GEO_CACHE: dict = {}


def _geo_stencil(dom: Domain):
    """Per-ray shift offsets and scalar bilinear weights.

    The probe offset is the same for every cell, so each interpolated ray is
    a fixed scalar-weighted sum of four shifted views of the padded array.
    """
    key = (dom.lattice.shape, dom.lattice.spacing)
    hit = _GEO_CACHE.get(key)
    if hit is not None:
        return hit
    h = dom.lattice.spacing
    s = 2.0 * dom.lattice.h_max
    w = int(np.ceil(s / min(h))) + 2
    angles = np.pi * np.arange(_N_DIRECTIONS) / _N_DIRECTIONS
    rays = []
    for ang in angles:
        e = np.array([np.cos(ang), np.sin(ang)])
        for sgn in (1.0, -1.0):
            ci = sgn * s * e[0] / h[0]
            cj = sgn * s * e[1] / h[1]
            oi, oj = int(np.floor(ci)), int(np.floor(cj))
            ti, tj = ci - oi, cj - oj
            rays.append((oi, oj, ((1 - ti) * (1 - tj), ti * (1 - tj),
                                  (1 - ti) * tj, ti * tj)))
    out = (s, w, rays)
    _GEO_CACHE[key] = out
    return out


def _geo_step(f: Field, dt: float) -> Field:
    dom = f.domain
    if dom.dim == 1:
        return f.copy()  # geometric F vanishes identically in 1d
    s, w, rays = _geo_stencil(dom)
    lam = dt / (0.5 * s * s)
    if lam > 1.0 + 1e-12:
        raise ValueError("geometric step needs dt <= s^2/2 (tighten via CFL)")
    P = _mirror_pad(f.values, w)
    n0, n1 = f.values.shape

    def view(oi, oj):
        return P[w + oi: w + oi + n0, w + oj: w + oj + n1]

    best_min = None
    best_max = None
    for k in range(_N_DIRECTIONS):
        oi, oj, (w00, w10, w01, w11) = rays[2 * k]
        a = (w00 * view(oi, oj) + w10 * view(oi + 1, oj)
             + w01 * view(oi, oj + 1) + w11 * view(oi + 1, oj + 1))
        oi, oj, (w00, w10, w01, w11) = rays[2 * k + 1]
        b = (w00 * view(oi, oj) + w10 * view(oi + 1, oj)
             + w01 * view(oi, oj + 1) + w11 * view(oi + 1, oj + 1))
        mn = np.minimum(a, b)
        mx = np.maximum(a, b)
        if best_min is None:
            best_min, best_max = mn, mx
        else:
            np.maximum(best_min, mn, out=best_min)
            np.minimum(best_max, mx, out=best_max)
    M = 0.5 * (best_min + best_max)
    return Field(dom, (1.0 - lam) * f.values + lam * M)


def f_step(f: Field, dt: float, fs: FSpec) -> Field:
    """One explicit monotone step of du = F(D^2 u, Du) dt."""
    dom = f.domain
    _require_box(dom)
    if dt < 0:
        raise ValueError("dt must be >= 0")
    if dt == 0:
        return f.copy()
    h = dom.lattice.h_min
    if dt > h * h / (2.0 * dom.dim * fs.lam) + 1e-15:
        raise ValueError("CFL violated: dt > h^2 / (2 d Lambda)")
    if fs.geometric:
        return _geo_step(f, dt)
    if fs.name == "zero":
        return f.copy()
    return _central_step(f, dt, fs)


def f_evolve(f: Field, duration: float, fs: FSpec, safety: float = 0.9) -> Field:
    """Advance by `duration` using CFL-sized substeps (dt = 0.9 x bound)."""
    if duration <= 0:
        return f.copy()
    dt0 = cfl_dt(f.domain, fs, safety)
    n = max(1, int(np.ceil(duration / dt0)))
    dt = duration / n
    out = f
    for _ in range(n):
        out = f_step(out, dt, fs)
    return out
