import numpy as np
import pytest

from roughneumann import convexcore as cc


ALL_BUILTINS = [
    cc.norm_hamiltonian(),
    cc.quadratic_hamiltonian(),
    cc.linear_hamiltonian([0.7, -0.3]),
    cc.cosine_hamiltonian(),
    cc.radial_poly_hamiltonian([0.0, -0.25, 0.5]),
    cc.aniso_norm_hamiltonian((1.0, 2.0)),
]


def _midpoint_convex(f, pts_a, pts_b, tol=1e-10):
    mid = f(0.5 * (pts_a + pts_b))
    return np.all(mid <= 0.5 * (np.asarray(f(pts_a)) + np.asarray(f(pts_b)))
                  + tol)


@pytest.mark.parametrize("comp", ALL_BUILTINS, ids=lambda c: c.name)
def test_dc_identity_and_convexity(comp):
    rng = np.random.default_rng(0)
    a = rng.uniform(-5, 5, size=(300, 2))
    b = rng.uniform(-5, 5, size=(300, 2))
    assert np.max(np.abs(comp.H(a) - (comp.H1(a) - comp.H2(a)))) < 1e-10
    assert _midpoint_convex(comp.H1, a, b)
    assert _midpoint_convex(comp.H2, a, b)


def test_homogeneous_flag():
    rng = np.random.default_rng(1)
    p = rng.uniform(-3, 3, size=(100, 2))
    for comp in ALL_BUILTINS:
        if not comp.homogeneous:
            continue
        for lam in (0.3, 1.7, 4.0):
            assert np.allclose(comp.H(lam * p), lam * comp.H(p), atol=1e-12)


def test_g_of_examples():
    spec = cc.make_spec(cc.norm_hamiltonian())
    p = np.array([[0.3, -0.4], [2.0, 0.0]])
    # H = |p| with DC (|p|, 0): G = |p|
    assert np.allclose(cc.g_of(spec, p), [0.5, 2.0])

    # H = H1 - H2 with H1 = H2 = |p|^2/2: G = 2 H1 and G - H = G is convex
    q = cc.quadratic_hamiltonian()
    comp = cc.Hamiltonian("zero_dc", lambda v: q.H1(v) - q.H1(v),
                          q.H1, q.H1)
    spec2 = cc.make_spec(comp, C_growth=4.0)
    assert np.allclose(spec2.G(p), 2.0 * q.H1(p))

    # convex radial with theta = -1: G - H = 0 is (trivially) convex
    spec3 = cc.make_spec(cc.norm_hamiltonian())
    vals = spec3.G(p) - spec3.components[0].H(p)
    assert np.allclose(vals, 0.0)


def test_g_plus_theta_h_convex():
    rng = np.random.default_rng(2)
    a = rng.uniform(-4, 4, size=(200, 2))
    b = rng.uniform(-4, 4, size=(200, 2))
    for comp in ALL_BUILTINS:
        spec = cc.make_spec(comp)
        for theta in (-1.0, -0.3, 0.6, 1.0):
            f = lambda p: spec.G(p) + theta * comp.H(p)
            assert _midpoint_convex(f, a, b, tol=1e-9), (comp.name, theta)


def test_quadratic_growth_sandwich():
    """C(nu.p - 1) <= G + sum theta_i H^i <= C(1 + |p|^2/2) with the stored
    C.  nu is existential; the search runs over a fine angular grid of
    directions and magnitudes in the closed unit ball (the degenerate
    combinations, e.g. (1+theta)|p| at theta = -1, need nu = 0)."""
    rng = np.random.default_rng(3)
    p = rng.uniform(-60, 60, size=(500, 2))
    angles = np.linspace(0, 2 * np.pi, 121)[:-1]
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    nus = np.concatenate([s * dirs for s in np.linspace(0.0, 1.0, 41)])
    for comp in ALL_BUILTINS:
        spec = cc.make_spec(comp)
        C = spec.C_growth
        for theta in (-1.0, 0.0, 1.0):
            vals = spec.G(p) + theta * comp.H(p)
            assert np.all(vals <= C * (1 + 0.5 * np.sum(p**2, -1)) + 1e-9), \
                comp.name
            lower = C * (p @ nus.T - 1.0)  # (N, n_nus)
            ok = np.any(np.all(vals[:, None] >= lower - 1e-9, axis=0))
            assert ok, comp.name


class TestDcDecompose:
    def test_quadratic(self):
        H1, H2 = cc.dc_decompose_smooth(
            lambda p: 0.5 * np.sum(np.atleast_2d(p)**2, -1), 1.0, dim=1)
        p = np.linspace(-3, 3, 7)[:, None]
        assert np.allclose(H1(p), np.sum(p**2, -1))
        assert np.allclose(H2(p), 0.5 * np.sum(p**2, -1))

    def test_cosine_second_differences(self):
        # oracle: finite-difference convexity scan of H1 = cos(p)-1+p^2/2
        H1, H2 = cc.dc_decompose_smooth(
            lambda p: np.cos(np.atleast_2d(p)[:, 0]) - 1.0, 1.0, dim=1)
        xs = np.linspace(-8, 8, 401)[:, None]
        h = 1e-3
        second = H1(xs + h) - 2 * H1(xs) + H1(xs - h)
        assert np.min(second) > -1e-9
        # second derivative 1 - cos(p) >= 0, zero at p = 0
        assert np.min(second / h**2) == pytest.approx(0.0, abs=1e-3)

    def test_neg_quadratic(self):
        # H = -p^2/2 with bound 1: H1 = 0, H2 = p^2/2 (numerically)
        H1, H2 = cc.dc_decompose_smooth(
            lambda p: -0.5 * np.sum(np.atleast_2d(p)**2, -1), 1.0, dim=1)
        p = np.linspace(-2, 2, 9)[:, None]
        assert np.allclose(H1(p), 0.0, atol=1e-12)
        assert np.allclose(H2(p), 0.5 * np.sum(p**2, -1))

    def test_insufficient_bound_raises(self):
        with pytest.raises(ValueError, match="hess_bound too small"):
            cc.dc_decompose_smooth(
                lambda p: np.cos(3.0 * np.atleast_2d(p)[:, 0]), 1.0, dim=1)


class TestLegendre:
    def test_self_conjugate(self):
        f = lambda P: 0.5 * np.sum(np.atleast_2d(P)**2, -1)
        for z in ([0.7], [-1.2]):
            assert cc.legendre(f, z, [(-8, 8)]) == pytest.approx(
                0.5 * z[0]**2, abs=1e-9)

    def test_scaled_example(self):
        # f = delta(|p|^2/2 + |p|), delta = 0.1: f*(0.5) = (0.5-0.1)^2/(2*0.1)
        # oracle: dense p-grid brute force
        delta = 0.1
        f = lambda P: delta * (0.5 * np.sum(np.atleast_2d(P)**2, -1)
                               + np.abs(np.atleast_2d(P)[:, 0]))
        grid = np.linspace(-30, 30, 120001)
        brute = np.max(grid * 0.5 - delta * (0.5 * grid**2 + np.abs(grid)))
        assert brute == pytest.approx(0.8, abs=1e-8)
        assert cc.legendre(f, [0.5], [(-30, 30)]) == pytest.approx(0.8,
                                                                   abs=1e-9)

    def test_norm_conjugate(self):
        f = lambda P: np.linalg.norm(np.atleast_2d(P), axis=-1)
        assert cc.legendre(f, [0.5], [(-5, 5)]) == pytest.approx(0.0,
                                                                 abs=1e-10)
        with pytest.raises(ValueError, match="search box too small"):
            cc.legendre(f, [1.5], [(-5, 5)])

    def test_biconjugation(self):
        # legendre twice reproduces a convex f on interior samples
        f = lambda P: 0.5 * np.sum(np.atleast_2d(P)**2, -1) \
            + np.abs(np.atleast_2d(P)[:, 0])
        # f' ranges over [-2.5, 2.5] for |x| <= 1.5: the conjugate grid must
        # cover it so the inner maximizer stays interior
        zs = np.linspace(-3.0, 3.0, 25)
        star = [cc.legendre(f, [z], [(-8, 8)], grid_step=5e-3) for z in zs]

        def fstar(P):
            P = np.atleast_2d(P)
            return np.interp(P[:, 0], zs, star)

        for x in (-1.0, 0.0, 0.8):
            double = cc.legendre(fstar, [x], [(-3 + 1e-9, 3 - 1e-9)],
                                 grid_step=5e-3)
            lip = 8.0
            assert abs(double - float(f(np.array([[x]]))[0])) \
                <= 2 * 5e-3 * lip + 0.06  # interp error of f* on the z-grid


def test_spec_from_config():
    spec = cc.spec_from_config([{"id": "norm"},
                                {"id": "quadratic", "params": {"a": 2.0}}])
    assert spec.m == 2
    assert spec.components[1].params["a"] == 2.0
    with pytest.raises(ValueError, match="unknown hamiltonian"):
        cc.spec_from_config([{"id": "bogus"}])
