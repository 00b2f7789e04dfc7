import numpy as np
import pytest

from roughneumann import geometry as geo
from roughneumann import hjstep as hj
from roughneumann import parabstep as pb


def square(n=64):
    return geo.rectangle((0.0, 0.0), (1.0, 1.0), (n, n))


class TestFSpecInvariants:
    def test_degenerate_ellipticity_sampled(self):
        rng = np.random.default_rng(0)
        for fs in (pb.heat_f(), pb.mcf_f(sigma_reg=0.01)):
            for _ in range(100):
                A = rng.standard_normal((2, 2))
                X = 0.5 * (A + A.T)
                B = rng.standard_normal((2, 2))
                Y = X + B @ B.T  # Y >= X
                p = rng.standard_normal(2)
                assert fs.F(X, p) <= fs.F(Y, p) + 1e-12

    def test_geometric_scaling_sampled(self):
        fs = pb.mcf_f(sigma_reg=None)  # exact nonlinearity away from p = 0
        rng = np.random.default_rng(1)
        for _ in range(100):
            A = rng.standard_normal((2, 2))
            X = 0.5 * (A + A.T)
            p = rng.standard_normal(2) * 3
            lam = rng.uniform(0.1, 5.0)
            mu = rng.uniform(-2.0, 2.0)
            lhs = fs.F(lam * X + mu * np.outer(p, p), lam * p)
            assert lhs == pytest.approx(lam * fs.F(X, p), abs=1e-6)

    def test_f_at_zero(self):
        for fs in (pb.zero_f(), pb.mcf_f(sigma_reg=0.01)):
            assert fs.F(np.zeros((2, 2)), np.zeros(2)) == pytest.approx(0.0)


class TestFStep:
    def test_cfl_enforced(self):
        dom = square(32)
        f = hj.Field(dom, np.zeros((32, 32)))
        fs = pb.heat_f()
        with pytest.raises(ValueError, match="CFL"):
            pb.f_step(f, 1.0, fs)

    def test_constants_unchanged(self):
        dom = square(32)
        f = hj.Field(dom, np.full((32, 32), 3.7))
        for fs in (pb.heat_f(), pb.mcf_f(sigma_reg=dom.lattice.h_min)):
            g = pb.f_step(f, pb.cfl_dt(dom, fs), fs)
            assert np.max(np.abs(g.values - f.values)) < 1e-12

    def test_affine_unchanged_interior(self):
        # mirror ghosts bend affine data at walls (Du.n != 0 there); the
        # interior is exact
        dom = square(64)
        fs = pb.mcf_f(sigma_reg=dom.lattice.h_min)
        f = hj.field_from_function(dom,
                                   lambda p: 0.3 * p[:, 0] - 0.2 * p[:, 1])
        g = pb.f_step(f, pb.cfl_dt(dom, fs), fs)
        w = 6
        assert np.max(np.abs(g.values[w:-w, w:-w]
                             - f.values[w:-w, w:-w])) < 1e-12

    def test_heat_decay_oracle(self):
        # du = u_xx with Neumann: cos(pi x) decays like exp(-pi^2 t)
        dom = geo.interval(0.0, 1.0, 128)
        fs = pb.heat_f()
        f = hj.field_from_function(dom, lambda p: np.cos(np.pi * p[:, 0]))
        t = 0.01
        g = pb.f_evolve(f, t, fs)
        factor = g.values.max() / f.values.max()
        assert factor == pytest.approx(np.exp(-np.pi**2 * t), rel=2e-3)

    def test_circle_shrinkage_oracle(self):
        # ODE oracle: dr/dt = -1/r so r(t) = sqrt(r0^2 - 2t)
        dom = square(128)
        fs = pb.mcf_f(sigma_reg=dom.lattice.h_min)
        r0, t = 0.3, 0.02
        f = hj.field_from_function(
            dom, lambda p: np.linalg.norm(p - 0.5, axis=-1) - r0)
        g = pb.f_evolve(f, t, fs)
        cells = np.abs(g.values) <= dom.lattice.h_min * 1.2
        rr = np.linalg.norm(dom.lattice.cell_centers()[cells] - 0.5, axis=-1)
        r_exact = np.sqrt(r0**2 - 2 * t)
        assert abs(rr.mean() - r_exact) <= 2 * dom.lattice.h_min

    def test_sigma_reg_insensitivity(self):
        # halving sigma_reg changes the circle-test radius by < h
        dom = square(96)
        r0, t = 0.3, 0.015

        def radius(sigma):
            fs = pb.mcf_f(sigma_reg=sigma)
            f = hj.field_from_function(
                dom, lambda p: np.linalg.norm(p - 0.5, axis=-1) - r0)
            g = pb.f_evolve(f, t, fs)
            cells = np.abs(g.values) <= dom.lattice.h_min * 1.2
            rr = np.linalg.norm(dom.lattice.cell_centers()[cells] - 0.5,
                                axis=-1)
            return rr.mean()

        h = dom.lattice.h_min
        assert abs(radius(h) - radius(h / 2)) < h

    @pytest.mark.parametrize("fs_builder", [
        pb.zero_f,
        pb.heat_f,
        lambda: pb.mcf_f(sigma_reg=1.0 / 48),
    ])
    def test_monotone_exact_random_pairs(self, fs_builder):
        dom = square(48)
        fs = fs_builder()
        dt = pb.cfl_dt(dom, fs)
        rng = np.random.default_rng(7)
        for _ in range(20):
            u = rng.standard_normal((48, 48)).cumsum(0).cumsum(1) / 48**2
            bump = np.abs(rng.standard_normal((48, 48))) * 0.1
            fu = hj.Field(dom, u)
            fv = hj.Field(dom, u + bump)
            su = pb.f_step(fu, dt, fs)
            sv = pb.f_step(fv, dt, fs)
            assert np.max(su.values - sv.values) <= 1e-12

    def test_constant_equivariance(self):
        dom = square(48)
        rng = np.random.default_rng(8)
        u = rng.standard_normal((48, 48)).cumsum(0) / 48
        for fs in (pb.heat_f(), pb.mcf_f(sigma_reg=dom.lattice.h_min)):
            dt = pb.cfl_dt(dom, fs)
            a = pb.f_step(hj.Field(dom, u + 2.0), dt, fs)
            b = pb.f_step(hj.Field(dom, u), dt, fs)
            assert np.max(np.abs(a.values - b.values - 2.0)) < 1e-12

    def test_neumann_symmetry_preserved(self):
        # u symmetric about the mid-axis stays symmetric: bitwise for the
        # central heat stencil, to float association order (last ulp) for
        # the directional geometric scheme
        dom = square(48)
        xs = dom.lattice.cell_centers()
        u = np.cos(2 * np.pi * xs[..., 0]) * np.sin(np.pi * xs[..., 1])
        u = 0.5 * (u + u[::-1, :])  # symmetrize across axis 0
        for fs in (pb.heat_f(), pb.mcf_f(sigma_reg=dom.lattice.h_min)):
            g = pb.f_step(hj.Field(dom, u), pb.cfl_dt(dom, fs), fs)
            assert np.max(np.abs(g.values - g.values[::-1, :])) < 1e-14

    def test_geometric_1d_identity(self):
        # tr[X (Id - p x p / |p|^2)] vanishes identically in one dimension
        dom = geo.interval(0.0, 1.0, 64)
        fs = pb.mcf_f(sigma_reg=dom.lattice.h_min)
        rng = np.random.default_rng(9)
        f = hj.Field(dom, rng.standard_normal(64))
        g = pb.f_step(f, pb.cfl_dt(dom, fs), fs)
        assert np.array_equal(g.values, f.values)

    def test_monotone_profile_preserved_exactly(self):
        # monotone function of one coordinate is a fixed point of the
        # geometric step (level lines are straight)
        dom = geo.strip_cylinder(-1.0, 1.0, 32, 64)
        fs = pb.mcf_f(sigma_reg=dom.lattice.h_min)
        f = hj.field_from_function(dom, lambda p: np.clip(p[:, 1], -0.5, 0.5))
        g = pb.f_step(f, pb.cfl_dt(dom, fs), fs)
        assert np.max(np.abs(g.values - f.values)) < 1e-12

    def test_requires_box_domain(self):
        dom = geo.disk((0, 0), 1.0, 32)
        f = hj.Field(dom, np.zeros((32, 32)))
        with pytest.raises(ValueError, match="box"):
            pb.f_step(f, 1e-5, pb.heat_f())
