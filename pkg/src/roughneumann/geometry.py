"""Convex domains, lattices, and the boundary penalization function psi.

Each supported domain carries a uniform cell-centered lattice and an analytic
convex penalization psi with

    psi convex,  inf psi = -1,  psi coercive,  D psi(x) . n(x) >= 1 on the
    boundary,

built as a strongly convex core plus a C^1 linear extension outside the
lattice window.  The linear extension keeps the gradient range compact, so
the convex conjugate psi* is finite exactly on a box or ball K and is given
in closed form there (Fenchel equality on the core), with a uniform strong
convexity constant kappa.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

PSI_STAR_INF = np.inf


# ---------------------------------------------------------------------------
# Lattice
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Lattice:
    """Uniform cell-centered grid: cell (i0, i1, ...) has center
    origin + (i + 1/2) * spacing, one entry per axis."""

    origin: tuple[float, ...]
    spacing: tuple[float, ...]
    shape: tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def h_min(self) -> float:
        return min(self.spacing)

    @property
    def h_max(self) -> float:
        return max(self.spacing)

    def axis_centers(self, axis: int) -> np.ndarray:
        n = self.shape[axis]
        return self.origin[axis] + (np.arange(n) + 0.5) * self.spacing[axis]

    def cell_centers(self) -> np.ndarray:
        """All cell centers, shape (*lattice shape, dim)."""
        axes = [self.axis_centers(a) for a in range(self.dim)]
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack(grids, axis=-1)

    def flat_centers(self) -> np.ndarray:
        return self.cell_centers().reshape(-1, self.dim)


# ---------------------------------------------------------------------------
# Conjugate supports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoxSupport:
    """K = product of closed intervals [lo_i, hi_i]."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def contains(self, p: np.ndarray, slack: float = 1e-12) -> np.ndarray:
        p = np.atleast_2d(p)
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        return np.all((p >= lo - slack) & (p <= hi + slack), axis=-1)

    def coord_interval(self, p: np.ndarray, axis: int) -> tuple[np.ndarray, np.ndarray]:
        """Feasible range of coordinate `axis` with the other coordinates of
        p held fixed (vectorized over rows of p)."""
        n = np.atleast_2d(p).shape[0]
        return (np.full(n, self.lo[axis]), np.full(n, self.hi[axis]))

    def sample_grid(self, per_axis: int) -> np.ndarray:
        axes = [np.linspace(l, h, per_axis) for l, h in zip(self.lo, self.hi)]
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack(grids, axis=-1).reshape(-1, len(self.lo))


@dataclass(frozen=True)
class BallSupport:
    """K = closed Euclidean ball of the given radius."""

    radius: float
    dim: int

    def contains(self, p: np.ndarray, slack: float = 1e-12) -> np.ndarray:
        p = np.atleast_2d(p)
        return np.linalg.norm(p, axis=-1) <= self.radius + slack

    def coord_interval(self, p: np.ndarray, axis: int) -> tuple[np.ndarray, np.ndarray]:
        p = np.atleast_2d(p)
        rest = np.sum(p**2, axis=-1) - p[:, axis] ** 2
        room = np.sqrt(np.maximum(self.radius**2 - rest, 0.0))
        return (-room, room)

    def sample_grid(self, per_axis: int) -> np.ndarray:
        axes = [np.linspace(-self.radius, self.radius, per_axis)] * self.dim
        grids = np.meshgrid(*axes, indexing="ij")
        pts = np.stack(grids, axis=-1).reshape(-1, self.dim)
        return pts[np.linalg.norm(pts, axis=-1) <= self.radius + 1e-12]


# ---------------------------------------------------------------------------
# 1D convex building blocks (with closed-form conjugates)
# ---------------------------------------------------------------------------


class _QuadPiece:
    """a*(s-c)^2 - 1 on [lo, hi], extended linearly (C^1) outside.

    Gradient range is [2a(lo-c), 2a(hi-c)]; on it the conjugate is
    p*c + p^2/(4a) + 1 with curvature 1/(2a).
    """

    def __init__(self, a: float, c: float, lo: float, hi: float):
        self.a, self.c, self.lo, self.hi = a, c, lo, hi
        self.g_lo = 2.0 * a * (lo - c)
        self.g_hi = 2.0 * a * (hi - c)
        self.kappa = 1.0 / (2.0 * a)

    def val(self, s):
        s = np.asarray(s, dtype=float)
        core = self.a * (s - self.c) ** 2 - 1.0
        v_lo = self.a * (self.lo - self.c) ** 2 - 1.0 + self.g_lo * (s - self.lo)
        v_hi = self.a * (self.hi - self.c) ** 2 - 1.0 + self.g_hi * (s - self.hi)
        return np.where(s < self.lo, v_lo, np.where(s > self.hi, v_hi, core))

    def grad(self, s):
        s = np.asarray(s, dtype=float)
        return np.clip(2.0 * self.a * (s - self.c), self.g_lo, self.g_hi)

    def conj(self, p):
        p = np.asarray(p, dtype=float)
        inside = (p >= self.g_lo - 1e-12) & (p <= self.g_hi + 1e-12)
        val = p * self.c + p**2 / (4.0 * self.a) + 1.0
        return np.where(inside, val, PSI_STAR_INF)


class _SqrtPiece:
    """lam*(sqrt(1+(s-c)^2)-1): coercive with globally bounded slope.

    Conjugate: p*c + lam - sqrt(lam^2-p^2) on [-lam, lam], curvature >= 1/lam.
    """

    def __init__(self, lam: float, c: float):
        self.lam, self.c = lam, c
        self.g_lo, self.g_hi = -lam, lam
        self.kappa = 1.0 / lam

    def val(self, s):
        s = np.asarray(s, dtype=float)
        return self.lam * (np.sqrt(1.0 + (s - self.c) ** 2) - 1.0)

    def grad(self, s):
        s = np.asarray(s, dtype=float)
        t = s - self.c
        return self.lam * t / np.sqrt(1.0 + t**2)

    def conj(self, p):
        p = np.asarray(p, dtype=float)
        inside = np.abs(p) <= self.lam + 1e-12
        rad = np.sqrt(np.maximum(self.lam**2 - p**2, 0.0))
        return np.where(inside, p * self.c + self.lam - rad, PSI_STAR_INF)


# ---------------------------------------------------------------------------
# BoundaryFn
# ---------------------------------------------------------------------------


@dataclass
class BoundaryFn:
    """psi together with its gradient, conjugate data and constants."""

    psi: Callable[[np.ndarray], np.ndarray]
    dpsi: Callable[[np.ndarray], np.ndarray]
    psi_star_fn: Callable[[np.ndarray], np.ndarray]
    K: object  # BoxSupport or BallSupport
    kappa: float
    d2_bound: float
    argmin: np.ndarray
    meta: dict = field(default_factory=dict)


def psi_star(bf: BoundaryFn, p: np.ndarray) -> np.ndarray:
    """Convex conjugate of psi; +inf sentinel outside the compact support K."""
    p = np.asarray(p, dtype=float)
    single = p.ndim == 1
    out = bf.psi_star_fn(np.atleast_2d(p))
    return out[0] if single else out


def _as_points(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    return x


def _separable_boundary_fn(pieces, extra_const: float, meta: dict) -> BoundaryFn:
    """psi(x) = sum_i piece_i(x_i) + extra_const, conjugates added likewise."""

    def psi(x):
        x = _as_points(x)
        return sum(p.val(x[:, i]) for i, p in enumerate(pieces)) + extra_const

    def dpsi(x):
        x = _as_points(x)
        return np.stack([p.grad(x[:, i]) for i, p in enumerate(pieces)], axis=-1)

    def conj(q):
        q = _as_points(q)
        return sum(p.conj(q[:, i]) for i, p in enumerate(pieces)) - extra_const

    K = BoxSupport(
        lo=tuple(p.g_lo for p in pieces),
        hi=tuple(p.g_hi for p in pieces),
    )
    kappa = min(p.kappa for p in pieces)
    d2 = max(2.0 * p.a if isinstance(p, _QuadPiece) else p.lam for p in pieces)
    argmin = np.array([p.c for p in pieces])
    return BoundaryFn(psi, dpsi, conj, K, kappa, d2, argmin, meta)


# ---------------------------------------------------------------------------
# Domain
# ---------------------------------------------------------------------------

_SUPPORTED = ("interval", "half_space", "disk", "rectangle", "strip_cylinder")


@dataclass
class Domain:
    kind: str
    params: dict
    lattice: Lattice
    theta: Optional[float] = None  # uniform convexity: n(x).(x-y) >= theta |x-y|^q
    q: Optional[float] = None
    _mask: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in _SUPPORTED:
            raise ValueError(f"unsupported domain kind: {self.kind!r}")

    @property
    def dim(self) -> int:
        return self.lattice.dim

    @property
    def mask(self) -> np.ndarray:
        """Cells whose center lies in the closed domain."""
        if self._mask is None:
            pts = self.lattice.flat_centers()
            self._mask = self.contains(pts).reshape(self.lattice.shape)
        return self._mask

    @property
    def is_box(self) -> bool:
        """True when the mask is the full lattice window (interval, rectangle,
        strip and aligned half-space windows)."""
        return bool(np.all(self.mask))

    # -- geometry queries ---------------------------------------------------

    def contains(self, x) -> np.ndarray:
        return self.signed_distance(x) <= 1e-12

    def signed_distance(self, x) -> np.ndarray:
        """Signed distance to the true boundary, negative inside.

        For strip/half-space windows only the genuine boundary counts, not
        the artificial axis truncation.
        """
        x = _as_points(x)
        k = self.kind
        if k == "interval":
            lo, hi = self.params["lo"], self.params["hi"]
            return np.maximum(lo - x[:, 0], x[:, 0] - hi)
        if k == "half_space":
            return -x[:, 0]
        if k == "disk":
            c = np.asarray(self.params["center"])
            return np.linalg.norm(x - c, axis=-1) - self.params["radius"]
        if k == "rectangle":
            lo = np.asarray(self.params["lo"])
            hi = np.asarray(self.params["hi"])
            gaps = np.maximum(lo - x, x - hi)
            return np.max(gaps, axis=-1)
        if k == "strip_cylinder":
            return np.maximum(-x[:, 0], x[:, 0] - 1.0)
        raise AssertionError(k)

    def boundary_points(self, n: int, rng=None) -> np.ndarray:
        """n points sampled on the true boundary (deterministic if rng given)."""
        rng = rng or np.random.default_rng(0)
        k = self.kind
        if k == "interval":
            lo, hi = self.params["lo"], self.params["hi"]
            pts = rng.choice([lo, hi], size=n)
            return pts[:, None]
        if k == "half_space":
            if self.dim == 1:
                return np.zeros((n, 1))
            span = self.lattice.axis_centers(1)
            ys = rng.uniform(span[0], span[-1], size=n)
            return np.stack([np.zeros(n), ys], axis=-1)
        if k == "disk":
            c = np.asarray(self.params["center"])
            r = self.params["radius"]
            ang = rng.uniform(0, 2 * np.pi, size=n)
            return c + r * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        if k == "rectangle":
            lo = np.asarray(self.params["lo"])
            hi = np.asarray(self.params["hi"])
            side = rng.integers(0, 4, size=n)
            t = rng.uniform(size=n)
            pts = np.empty((n, 2))
            for i, (s, tt) in enumerate(zip(side, t)):
                if s == 0:
                    pts[i] = (lo[0], lo[1] + tt * (hi[1] - lo[1]))
                elif s == 1:
                    pts[i] = (hi[0], lo[1] + tt * (hi[1] - lo[1]))
                elif s == 2:
                    pts[i] = (lo[0] + tt * (hi[0] - lo[0]), lo[1])
                else:
                    pts[i] = (lo[0] + tt * (hi[0] - lo[0]), hi[1])
            return pts
        if k == "strip_cylinder":
            span = self.lattice.axis_centers(1)
            ys = rng.uniform(span[0], span[-1], size=n)
            xs = rng.choice([0.0, 1.0], size=n)
            return np.stack([xs, ys], axis=-1)
        raise AssertionError(k)

    def interior_points(self, n: int, rng=None, margin: float = 0.0) -> np.ndarray:
        rng = rng or np.random.default_rng(0)
        pts = []
        lo = np.asarray([ax[0] for ax in map(self.lattice.axis_centers, range(self.dim))])
        hi = np.asarray([ax[-1] for ax in map(self.lattice.axis_centers, range(self.dim))])
        while len(pts) < n:
            cand = rng.uniform(lo, hi, size=(4 * n, self.dim))
            keep = self.signed_distance(cand) <= -margin
            pts.extend(cand[keep][: n - len(pts)])
        return np.asarray(pts)


def outward_normal(domain: Domain, x) -> np.ndarray:
    """Unit outward normal at a boundary point (within h/2 of the boundary)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = _as_points(x)
    sd = domain.signed_distance(pts)
    tol = 0.5 * domain.lattice.h_min
    if np.any(np.abs(sd) > tol + 1e-12):
        raise ValueError("not a boundary point")
    k = domain.kind
    if k == "interval":
        lo, hi = domain.params["lo"], domain.params["hi"]
        mid = 0.5 * (lo + hi)
        n = np.where(pts[:, 0] > mid, 1.0, -1.0)[:, None]
    elif k == "half_space":
        n = np.zeros_like(pts)
        n[:, 0] = -1.0
    elif k == "disk":
        c = np.asarray(domain.params["center"])
        v = pts - c
        n = v / np.linalg.norm(v, axis=-1, keepdims=True)
    elif k == "rectangle":
        lo = np.asarray(domain.params["lo"])
        hi = np.asarray(domain.params["hi"])
        gaps = np.maximum(lo - pts, pts - hi)  # per-axis signed face distance
        n = np.zeros_like(pts)
        for i in range(pts.shape[0]):
            ax = int(np.argmax(gaps[i]))
            n[i, ax] = 1.0 if pts[i, ax] - hi[ax] >= lo[ax] - pts[i, ax] else -1.0
    elif k == "strip_cylinder":
        n = np.zeros_like(pts)
        n[:, 0] = np.where(pts[:, 0] > 0.5, 1.0, -1.0)
    else:
        raise AssertionError(k)
    return n[0] if single else n


# -- constructors -----------------------------------------------------------


def interval(lo: float = 0.0, hi: float = 1.0, n: int = 128) -> Domain:
    h = (hi - lo) / n
    lat = Lattice((lo,), (h,), (n,))
    return Domain("interval", {"lo": lo, "hi": hi}, lat)


def half_space(window: float = 2.0, n: int = 128, dim: int = 2,
               transverse: float = 2.0) -> Domain:
    """{x . e1 > 0}, realized on the window [0, window] (x [-T/2, T/2])."""
    h = window / n
    if dim == 1:
        lat = Lattice((0.0,), (h,), (n,))
    else:
        nt = n
        ht = transverse / nt
        lat = Lattice((0.0, -transverse / 2), (h, ht), (n, nt))
    return Domain("half_space", {"window": window}, lat)


def disk(center=(0.0, 0.0), radius: float = 1.0, n: int = 64) -> Domain:
    c = np.asarray(center, dtype=float)
    h = 2.0 * radius / n
    lat = Lattice((c[0] - radius, c[1] - radius), (h, h), (n, n))
    return Domain(
        "disk",
        {"center": tuple(c), "radius": radius},
        lat,
        theta=1.0 / (2.0 * radius),
        q=2.0,
    )


def rectangle(lo=(0.0, 0.0), hi=(1.0, 1.0), n=(64, 64)) -> Domain:
    lo = tuple(map(float, lo))
    hi = tuple(map(float, hi))
    h = tuple((hi[i] - lo[i]) / n[i] for i in range(2))
    lat = Lattice(lo, h, tuple(n))
    return Domain("rectangle", {"lo": lo, "hi": hi}, lat)


def strip_cylinder(x_min: float, x_max: float, n_cross: int = 64,
                   n_axis: int = 256) -> Domain:
    """D x R with D = [0,1]; axis window [x_min, x_max] on the last axis."""
    h0 = 1.0 / n_cross
    h1 = (x_max - x_min) / n_axis
    lat = Lattice((0.0, x_min), (h0, h1), (n_cross, n_axis))
    return Domain("strip_cylinder", {"x_min": x_min, "x_max": x_max}, lat)


# -- psi per domain ----------------------------------------------------------

_AXIS_LAMBDA = 0.5  # slope budget of the coercive term along unbounded axes


def make_psi(domain: Domain) -> BoundaryFn:
    """Analytic boundary penalization for the domain (see module docstring)."""
    k = domain.kind
    if k == "interval":
        lo, hi = domain.params["lo"], domain.params["hi"]
        L = hi - lo
        a = max(4.0 / L**2, 2.0 / L)  # endpoint slope a*L >= 1, equals 4/L for L<=2
        piece = _QuadPiece(a, 0.5 * (lo + hi), lo, hi)
        return _separable_boundary_fn([piece], 0.0, {"a": a})

    if k == "half_space":
        w = domain.params["window"]
        a, s0 = 2.0, 0.5
        phi = _QuadPiece(a, s0, 0.0, max(w, 1.0))
        if domain.dim == 1:
            return _separable_boundary_fn([phi], 0.0, {"a": a, "s0": s0})
        c1 = 0.0  # transverse window is centered at 0
        trans = _SqrtPiece(_AXIS_LAMBDA, c1)
        bf = _separable_boundary_fn([phi, trans], 0.0,
                                    {"a": a, "s0": s0, "lambda": _AXIS_LAMBDA})
        return bf

    if k == "disk":
        c = np.asarray(domain.params["center"])
        r = domain.params["radius"]
        a = 2.0 / r**2  # boundary slope 2*a*r = 4/r >= 1 for r <= 4
        slope = 2.0 * a * r

        def psi(x):
            x = _as_points(x)
            rho = np.linalg.norm(x - c, axis=-1)
            core = a * rho**2 - 1.0
            ext = (a * r**2 - 1.0) + slope * (rho - r)
            return np.where(rho <= r, core, ext)

        def dpsi(x):
            x = _as_points(x)
            v = x - c
            rho = np.linalg.norm(v, axis=-1, keepdims=True)
            rho_safe = np.maximum(rho, 1e-300)
            mag = np.minimum(2.0 * a * rho, slope)
            return v / rho_safe * mag

        def conj(p):
            p = _as_points(p)
            nrm = np.linalg.norm(p, axis=-1)
            inside = nrm <= slope + 1e-12
            val = p @ c + nrm**2 / (4.0 * a) + 1.0
            return np.where(inside, val, PSI_STAR_INF)

        K = BallSupport(slope, 2)
        return BoundaryFn(psi, dpsi, conj, K, 1.0 / (2.0 * a), 2.0 * a,
                          np.asarray(c, dtype=float), {"a": a})

    if k == "rectangle":
        lo = domain.params["lo"]
        hi = domain.params["hi"]
        pieces = []
        for i in range(2):
            L = hi[i] - lo[i]
            a = max(4.0 / L**2, 2.0 / L)
            pieces.append(_QuadPiece(a, 0.5 * (lo[i] + hi[i]), lo[i], hi[i]))
        # each 1d piece has min -1; +1 restores inf psi = -1
        return _separable_boundary_fn(pieces, 1.0, {})

    if k == "strip_cylinder":
        x_min, x_max = domain.params["x_min"], domain.params["x_max"]
        cross = _QuadPiece(4.0, 0.5, 0.0, 1.0)
        axis = _SqrtPiece(_AXIS_LAMBDA, 0.5 * (x_min + x_max))
        return _separable_boundary_fn([cross, axis], 0.0,
                                      {"lambda": _AXIS_LAMBDA})

    raise ValueError(f"unsupported domain kind: {k!r}")
