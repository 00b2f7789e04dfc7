"""Convex-analysis toolkit: Hamiltonians with difference-of-convex splittings,
the convexity reservoir G = sum(H1 + H2), and a discrete Legendre transform.

Every evaluator is vectorized over point batches of shape (N, d) -> (N,).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np


def _norms(p: np.ndarray) -> np.ndarray:
    return np.linalg.norm(np.atleast_2d(p), axis=-1)


@dataclass(frozen=True)
class Hamiltonian:
    """One component H = H1 - H2 with both parts convex."""

    name: str
    H: Callable[[np.ndarray], np.ndarray]
    H1: Callable[[np.ndarray], np.ndarray]
    H2: Callable[[np.ndarray], np.ndarray]
    convex: bool = False            # H itself convex (then H2 may be 0)
    radial: bool = False            # H(p) = h(|p|)
    homogeneous: bool = False       # H(lam p) = lam H(p), lam > 0
    globally_lipschitz: bool = False
    h_scalar: Optional[Callable[[np.ndarray], np.ndarray]] = None  # radial profile
    params: dict = field(default_factory=dict)

    def __call__(self, p):
        return self.H(np.atleast_2d(np.asarray(p, dtype=float)))

    def flipped(self) -> "Hamiltonian":
        """p -> H(-p), with the DC parts flipped likewise (still convex)."""
        return Hamiltonian(
            name=self.name + "_flip",
            H=lambda p: self.H(-np.atleast_2d(p)),
            H1=lambda p: self.H1(-np.atleast_2d(p)),
            H2=lambda p: self.H2(-np.atleast_2d(p)),
            convex=self.convex,
            radial=self.radial,
            homogeneous=self.homogeneous,
            globally_lipschitz=self.globally_lipschitz,
            h_scalar=self.h_scalar,
            params=self.params,
        )


@dataclass(frozen=True)
class HamiltonianSpec:
    """m-component Hamiltonian with growth constant for the (quadratic) sandwich
    C(nu.p - 1) <= G + sum_i theta_i H^i <= C (1 + |p|^2/2)."""

    components: tuple[Hamiltonian, ...]
    C_growth: float

    @property
    def m(self) -> int:
        return len(self.components)

    @property
    def radial(self) -> bool:
        return all(c.radial for c in self.components)

    @property
    def convex_each(self) -> bool:
        return all(c.convex for c in self.components)

    @property
    def homogeneous(self) -> bool:
        return all(c.homogeneous for c in self.components)

    @property
    def globally_lipschitz(self) -> bool:
        return all(c.globally_lipschitz for c in self.components)

    def G(self, p) -> np.ndarray:
        p = np.atleast_2d(np.asarray(p, dtype=float))
        return sum(c.H1(p) + c.H2(p) for c in self.components)

    def H_all(self, p) -> np.ndarray:
        """All components stacked, shape (m, N)."""
        p = np.atleast_2d(np.asarray(p, dtype=float))
        return np.stack([c.H(p) for c in self.components], axis=0)

    def H_at_zero(self) -> np.ndarray:
        z = np.zeros((1, 2))
        return np.array([float(c.H(z)[0]) for c in self.components])


def g_of(spec: HamiltonianSpec, p) -> np.ndarray:
    """G(p) = sum_i (H^i_1 + H^i_2)(p)."""
    return spec.G(p)


# ---------------------------------------------------------------------------
# Built-in Hamiltonians
# ---------------------------------------------------------------------------


def norm_hamiltonian() -> Hamiltonian:
    return Hamiltonian(
        name="norm",
        H=lambda p: _norms(p),
        H1=lambda p: _norms(p),
        H2=lambda p: np.zeros(np.atleast_2d(p).shape[0]),
        convex=True,
        radial=True,
        homogeneous=True,
        globally_lipschitz=True,
        h_scalar=lambda r: np.asarray(r, dtype=float),
    )


def quadratic_hamiltonian(a: float = 1.0) -> Hamiltonian:
    return Hamiltonian(
        name="quadratic",
        H=lambda p: 0.5 * a * _norms(p) ** 2,
        H1=lambda p: 0.5 * a * _norms(p) ** 2,
        H2=lambda p: np.zeros(np.atleast_2d(p).shape[0]),
        convex=True,
        radial=True,
        h_scalar=lambda r: 0.5 * a * np.asarray(r, dtype=float) ** 2,
        params={"a": a},
    )


def linear_hamiltonian(a) -> Hamiltonian:
    a = np.atleast_1d(np.asarray(a, dtype=float))

    def dot(p):
        p = np.atleast_2d(p)
        return p @ a[: p.shape[1]]

    return Hamiltonian(
        name="linear",
        H=dot,
        H1=dot,
        H2=lambda p: np.zeros(np.atleast_2d(p).shape[0]),
        convex=True,
        homogeneous=True,
        globally_lipschitz=True,
        params={"a": tuple(a)},
    )


def cosine_hamiltonian() -> Hamiltonian:
    """H(p) = cos(|p|) - 1, the smooth DC example with Hessian bound 1."""

    def H(p):
        return np.cos(_norms(p)) - 1.0

    def H1(p):
        r = _norms(p)
        return np.cos(r) - 1.0 + 0.5 * r**2

    def H2(p):
        return 0.5 * _norms(p) ** 2

    return Hamiltonian(
        name="cosine", H=H, H1=H1, H2=H2, radial=True,
        h_scalar=lambda r: np.cos(np.asarray(r, dtype=float)) - 1.0,
    )


def radial_poly_hamiltonian(coeffs, dc_constant: Optional[float] = None) -> Hamiltonian:
    """h(r) = sum_k coeffs[k] r^k, split as h1 = h + C(r + r^2), h2 = C(r + r^2).

    C defaults to a bound making h1 convex as a function of p (the paper's
    radial construction needs C >= ||h||_C2 on the relevant range).
    """
    coeffs = np.asarray(coeffs, dtype=float)

    def h(r):
        r = np.asarray(r, dtype=float)
        return sum(c * r**k for k, c in enumerate(coeffs))

    if dc_constant is None:
        # smallest C with h'' + 2C >= 0 and h' + C >= 0 (makes h1 convex as a
        # function of p, including the tangential eigenvalue), plus margin
        rr = np.linspace(0.0, 50.0, 2001)
        d1 = np.gradient(h(rr), rr)
        d2 = np.gradient(d1, rr)
        dc_constant = float(max(0.0, -np.min(d1), -0.5 * np.min(d2)) + 0.25)
    C = dc_constant

    def H(p):
        return h(_norms(p))

    def H1(p):
        r = _norms(p)
        return h(r) + C * (r + r**2)

    def H2(p):
        r = _norms(p)
        return C * (r + r**2)

    return Hamiltonian(
        name="radial_poly", H=H, H1=H1, H2=H2, radial=True, h_scalar=h,
        params={"coeffs": tuple(coeffs), "C": C},
    )


def aniso_norm_hamiltonian(weights=(1.0, 2.0)) -> Hamiltonian:
    """H(p) = sqrt(sum w_i p_i^2): 1-homogeneous, convex, C^2 near S^{d-1}."""
    w = np.asarray(weights, dtype=float)

    def H(p):
        p = np.atleast_2d(p)
        return np.sqrt(np.sum(w[: p.shape[1]] * p**2, axis=-1))

    return Hamiltonian(
        name="aniso_norm", H=H, H1=H,
        H2=lambda p: np.zeros(np.atleast_2d(p).shape[0]),
        convex=True, homogeneous=True, globally_lipschitz=True,
        params={"weights": tuple(w)},
    )


_BUILTIN_FACTORIES = {
    "norm": lambda params: norm_hamiltonian(),
    "quadratic": lambda params: quadratic_hamiltonian(**params),
    "linear": lambda params: linear_hamiltonian(params.get("a", 1.0)),
    "cosine": lambda params: cosine_hamiltonian(),
    "radial_poly": lambda params: radial_poly_hamiltonian(**params),
    "aniso_norm": lambda params: aniso_norm_hamiltonian(**params),
}

# Growth constants for the (quadratic) sandwich, calibrated over the built-ins
# on |p| <= 100 with the unit-vector search for nu (see tests).
_GROWTH_DEFAULT = {
    "norm": 2.5,
    "quadratic": 3.0,
    "linear": 4.0,
    "cosine": 3.0,
    "radial_poly": None,  # computed from the coefficients
    "aniso_norm": 4.0,
}


def make_spec(*components, C_growth: Optional[float] = None) -> HamiltonianSpec:
    comps = tuple(components)
    if C_growth is None:
        total = 0.0
        for c in comps:
            base = _GROWTH_DEFAULT.get(c.name.replace("_flip", ""), None)
            if base is None:
                Cc = c.params.get("C", 1.0)
                base = 4.0 * (1.0 + Cc)
            total += base
        C_growth = max(2.0, total)
    return HamiltonianSpec(comps, float(C_growth))


def spec_from_config(entries) -> HamiltonianSpec:
    """entries: list of {id: ..., params: {...}} dicts."""
    comps = []
    for e in entries:
        hid = e["id"]
        if hid not in _BUILTIN_FACTORIES:
            raise ValueError(f"unknown hamiltonian id: {hid!r}")
        comps.append(_BUILTIN_FACTORIES[hid](e.get("params", {})))
    return make_spec(*comps)


# ---------------------------------------------------------------------------
# DC decomposition of a smooth Hamiltonian
# ---------------------------------------------------------------------------


def dc_decompose_smooth(H: Callable, hess_bound: float, dim: int = 1,
                        check_box: float = 10.0):
    """Split a C^2 Hamiltonian as H1 = H + (b/2)|p|^2, H2 = (b/2)|p|^2.

    Spot-checks convexity of H1 with second differences on a sample box and
    raises if the bound is too small.
    """

    def H1(p):
        p = np.atleast_2d(p)
        return np.asarray(H(p)) + 0.5 * hess_bound * _norms(p) ** 2

    def H2(p):
        p = np.atleast_2d(p)
        return 0.5 * hess_bound * _norms(p) ** 2

    rng = np.random.default_rng(7)
    pts = rng.uniform(-check_box, check_box, size=(256, dim))
    for ax in range(dim):
        e = np.zeros(dim)
        e[ax] = 1e-3
        second = H1(pts + e) - 2.0 * H1(pts) + H1(pts - e)
        if np.min(second) < -1e-10:
            raise ValueError("hess_bound too small")
    return H1, H2


# ---------------------------------------------------------------------------
# Discrete Legendre transform
# ---------------------------------------------------------------------------


def _golden_max_scalar(f, lo, hi, iters=80):
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def legendre(f: Callable, z, search_box, grid_step: float = 1e-2,
             refine_tol: float = 1e-10) -> float:
    """sup_p { p.z - f(p) } by grid scan plus per-coordinate golden refinement.

    search_box: (lo, hi) per axis, e.g. [(-4, 4)] or [(-4, 4), (-4, 4)].
    Raises if the grid maximizer sits on the box boundary (the true maximizer
    escaped the box or the conjugate is +inf there).
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    d = len(z)
    box = [tuple(map(float, b)) for b in search_box]
    axes = [np.arange(lo, hi + 0.5 * grid_step, grid_step) for lo, hi in box]
    grids = np.meshgrid(*axes, indexing="ij")
    P = np.stack(grids, axis=-1).reshape(-1, d)
    vals = P @ z - np.asarray(f(P))
    k = int(np.argmax(vals))
    p = P[k].copy()
    for ax in range(d):
        if abs(p[ax] - box[ax][0]) < 0.5 * grid_step or abs(p[ax] - box[ax][1]) < 0.5 * grid_step:
            raise ValueError("search box too small")

    def obj(q):
        return float(q @ z - np.asarray(f(q[None, :]))[0])

    best = obj(p)
    for _ in range(60):
        improved = 0.0
        for ax in range(d):
            lo = max(box[ax][0], p[ax] - grid_step)
            hi = min(box[ax][1], p[ax] + grid_step)

            def g(s, ax=ax):
                q = p.copy()
                q[ax] = s
                return obj(q)

            s, v = _golden_max_scalar(g, lo, hi)
            if v > best:
                improved += v - best
                best = v
                p[ax] = s
        if improved < refine_tol:
            break
    return best
