import numpy as np
import pytest

from roughneumann import convexcore as cc
from roughneumann import geometry as geo
from roughneumann import hjstep as hj
from roughneumann import parabstep as pb
from roughneumann import signal as sig
from roughneumann import solver as sv
from roughneumann.cli import random_lipschitz_field


@pytest.fixture
def interval_setup():
    dom = geo.interval(0.0, 1.0, 128)
    u0 = hj.field_from_function(dom, lambda p: np.abs(p[:, 0] - 0.5))
    spec = cc.make_spec(cc.norm_hamiltonian())
    return dom, u0, spec


def test_zero_path_matches_parabstep_bitwise(interval_setup):
    dom, u0, spec = interval_setup
    fs = pb.heat_f()
    path = sig.constant_path(0.01, n_seg=2)
    traj = sv.solve(u0, path, spec, fs, sv.RunControls())
    # replicate the exact substep pattern of the solver
    ref = u0
    dt0 = pb.cfl_dt(dom, fs)
    for k in range(2):
        seg = 0.005
        n = int(np.ceil(seg / dt0))
        for _ in range(n):
            ref = pb.f_step(ref, seg / n, fs)
    assert np.array_equal(traj.final().values, ref.values)


def test_semigroup_collapse(interval_setup):
    dom, u0, spec = interval_setup
    fs = pb.zero_f()
    z = sig.DrivingPath(np.array([0.0, 0.3, 0.6, 1.0]),
                        np.array([[0.0], [0.05], [0.17], [0.3]]))
    traj = sv.solve(u0, z, spec, fs, sv.RunControls())
    ref = hj.dilate(u0, 0.3)
    assert np.max(np.abs(traj.final().values - ref.values)) \
        <= dom.lattice.h_min


def test_solution_bound_generic(interval_setup):
    dom, u0, spec = interval_setup
    fs = pb.heat_f()
    z = sig.brownian_sample(3, 0.2, 1 / 64)
    rep = sv.verify_solution_bound(
        u0, z, spec, fs,
        sv.RunControls(output_times=list(np.linspace(0, 0.2, 5))))
    assert rep.passed


def test_solution_bound_nonzero_h0():
    # H with H(0) != 0 exercises the drift term of the envelope
    dom = geo.interval(-1.0, 1.0, 128)
    u0 = hj.field_from_function(dom, lambda p: 0.3 * np.sin(np.pi * p[:, 0]))
    comp = cc.cosine_hamiltonian()  # H(0) = 0 but DC parts nontrivial
    spec = cc.make_spec(comp)
    z = sig.brownian_sample(5, 0.05, 1 / 32)
    rep = sv.verify_solution_bound(u0, z, spec, pb.zero_f(),
                                   sv.RunControls(), slack=5e-2)
    assert rep.passed  # Trotter splitting adds a small residual


def test_determinism(interval_setup):
    dom, u0, spec = interval_setup
    fs = pb.mcf_f(sigma_reg=dom.lattice.h_min)
    z = sig.brownian_sample(11, 0.05, 1 / 64)
    a = sv.solve(u0, z, spec, fs, sv.RunControls())
    b = sv.solve(u0, z, spec, fs, sv.RunControls())
    assert np.array_equal(a.final().values, b.final().values)


def test_comparison_exact(interval_setup):
    dom, u0, spec = interval_setup
    fs = pb.heat_f()
    v0 = hj.Field(dom, u0.values + 0.5)
    z = sig.brownian_sample(7, 0.2, 1 / 64)
    ctrl = sv.RunControls(output_times=list(np.linspace(0, 0.2, 5)))
    rep = sv.verify_comparison(u0, v0, z, spec, fs, ctrl)
    assert rep.passed
    assert rep.details["sup_contraction"]
    # constant gap is preserved exactly (constant equivariance)
    tu = sv.solve(u0, z, spec, fs, ctrl)
    tv = sv.solve(v0, z, spec, fs, ctrl)
    gap = tv.final().values - tu.final().values
    assert np.max(np.abs(gap - 0.5)) < 1e-12


def test_comparison_rejects_unordered(interval_setup):
    dom, u0, spec = interval_setup
    v0 = hj.Field(dom, u0.values - 0.1)
    with pytest.raises(ValueError):
        sv.verify_comparison(u0, v0, sig.constant_path(0.1), spec,
                             pb.zero_f(), sv.RunControls())


def test_path_monotonicity(interval_setup):
    dom, u0, spec = interval_setup
    fs = pb.zero_f()
    z = sig.brownian_sample(13, 0.2, 1 / 64)
    eta = sig.DrivingPath(z.times,
                          z.values + np.linspace(0, 0.15, len(z.times))[:, None])
    rep = sv.verify_path_monotonicity(u0, z, eta, spec, fs, sv.RunControls())
    assert rep.passed
    # eta = zeta gives equality
    rep_eq = sv.verify_path_monotonicity(u0, z, z, spec, fs,
                                         sv.RunControls())
    assert rep_eq.worst <= 1e-15


def test_path_monotonicity_running_min(interval_setup):
    # zeta = running min of eta (piecewise constant between its new lows)
    dom, u0, spec = interval_setup
    eta = sig.brownian_sample(17, 0.2, 1 / 64)
    zmin = np.minimum.accumulate(eta.values, axis=0)
    z = sig.DrivingPath(eta.times, zmin)
    rep = sv.verify_path_monotonicity(u0, z, eta, spec, pb.zero_f(),
                                      sv.RunControls())
    assert rep.passed


def test_path_monotonicity_requires_hypothesis(interval_setup):
    dom, u0, spec = interval_setup
    z = sig.linear_path(0.1, 1.0, n_seg=4)
    eta = sig.linear_path(0.1, 0.5, n_seg=4)
    with pytest.raises(ValueError, match="hypothesis"):
        sv.verify_path_monotonicity(u0, z, eta, spec, pb.zero_f(),
                                    sv.RunControls())


class TestSandwich:
    def test_monotone_path_collapses_lower_bound(self, interval_setup):
        dom, u0, spec = interval_setup
        z = sig.linear_path(0.2, 1.0, n_seg=8)  # nondecreasing
        rep = sv.verify_sandwich(u0, z, pb.zero_f(),
                                 sv.RunControls(output_times=[0.1, 0.2]),
                                 spec)
        assert rep.passed
        # with F = 0 and monotone xi the lower bound is dilate(xi(t)) u0:
        # the solution equals it up to rounding
        traj = sv.solve(u0, z, spec, pb.zero_f(),
                        sv.RunControls(output_times=[0.2]))
        low = hj.dilate(u0, 0.2)
        assert np.max(np.abs(traj.final().values - low.values)) \
            <= dom.lattice.h_min

    def test_zero_path_both_bounds_equal_sf(self, interval_setup):
        dom, u0, spec = interval_setup
        fs = pb.heat_f()
        z = sig.constant_path(0.02, n_seg=2)
        rep = sv.verify_sandwich(u0, z, fs, sv.RunControls(), spec)
        assert rep.passed

    def test_brownian_mcf_strip(self):
        dom = geo.strip_cylinder(-1.0, 1.0, 32, 64)
        u0 = hj.field_from_function(
            dom, lambda p: np.clip(p[:, 1], -0.4, 0.4))
        spec = cc.make_spec(cc.norm_hamiltonian())
        fs = pb.mcf_f(sigma_reg=dom.lattice.h_min)
        for seed in (0, 1):
            z = sig.brownian_sample(seed, 0.02, 1 / 256, scale=1.0)
            rep = sv.verify_sandwich(
                u0, z, fs, sv.RunControls(output_times=[0.01, 0.02]), spec)
            assert rep.passed, rep.line()


class TestRefinement:
    def test_transport_oracle_order_h(self):
        # linear transport: exact solution is shifted data away from walls
        a = 0.7
        spec = cc.make_spec(cc.linear_hamiltonian([a]))
        fs = pb.zero_f()
        T = 0.25
        errs = []
        for level in range(3):
            n = 64 * 2**level
            dom = geo.interval(0.0, 1.0, n)
            u0 = hj.field_from_function(
                dom, lambda p: np.sin(2 * np.pi * p[:, 0]))
            z = sig.linear_path(T, 1.0, n_seg=4 * 2**level)
            traj = sv.solve(u0, z, spec, fs, sv.RunControls())
            xs = dom.lattice.axis_centers(0)
            interior = (xs > a * T + 0.05) & (xs < 0.95)
            exact = np.sin(2 * np.pi * (xs - a * T))
            errs.append(np.max(np.abs(traj.final().values[interior]
                                      - exact[interior])))
            # O(h): the shift rounds to whole cells, position error <= h/2
            assert errs[-1] <= np.pi * dom.lattice.h_min

    def test_heat_oracle_order_h2(self):
        fs = pb.heat_f()
        spec = cc.make_spec(cc.norm_hamiltonian())
        T = 0.005
        errs = []
        for level in range(3):
            n = 32 * 2**level
            dom = geo.interval(0.0, 1.0, n)
            u0 = hj.field_from_function(
                dom, lambda p: np.cos(np.pi * p[:, 0]))
            z = sig.constant_path(T, n_seg=2)
            traj = sv.solve(u0, z, spec, fs, sv.RunControls())
            xs = dom.lattice.axis_centers(0)
            exact = np.exp(-np.pi**2 * T) * np.cos(np.pi * xs)
            errs.append(np.max(np.abs(traj.final().values - exact)))
        assert errs[0] / errs[1] > 3.0  # second order
        assert errs[1] / errs[2] > 3.0

    def test_refine_until_cauchy(self):
        # smooth driving signal: piecewise-linear densification converges
        # at O(dt^2) and the grid terms at O(h), so dyadic residual factors
        # stay above 1.5 (Brownian signals give only the sqrt(dt) modulus
        # and are exercised at fixed level elsewhere)
        spec = cc.make_spec(cc.norm_hamiltonian())
        fs = pb.heat_f()
        T = 0.1

        def problem(level):
            n = 32 * 2**level
            dom = geo.interval(0.0, 1.0, n)
            u0 = hj.field_from_function(
                dom, lambda p: np.abs(p[:, 0] - 0.4))
            times = np.linspace(0.0, T, 6 * 2**level + 1)
            vals = 0.15 * np.sin(3 * np.pi * times / T)[:, None]
            z = sig.DrivingPath(times, vals)
            return sv.solve(u0, z, spec, fs, sv.RunControls()).final()

        rep = sv.refine_until_cauchy(problem, levels=4)
        assert rep.passed, rep.details

    def test_needs_three_levels(self):
        with pytest.raises(ValueError):
            sv.refine_until_cauchy(lambda lv: None, levels=2)


class TestModuli:
    def test_space_modulus_dilation_preserves_lip(self, interval_setup):
        dom, u0, spec = interval_setup
        z = sig.brownian_sample(29, 0.2, 1 / 64)
        ctrl = sv.RunControls(output_times=list(np.linspace(0, 0.2, 6)))
        traj = sv.solve(u0, z, spec, pb.zero_f(), ctrl)
        rep = sv.estimate_space_modulus(traj)
        assert rep.passed
        assert rep.worst <= u0.lipschitz() + 1e-12  # sup over balls

    def test_space_modulus_constant(self):
        dom = geo.interval(0.0, 1.0, 64)
        u0 = hj.Field(dom, np.full(64, 1.0))
        spec = cc.make_spec(cc.norm_hamiltonian())
        traj = sv.solve(u0, sig.brownian_sample(1, 0.1, 1 / 32), spec,
                        pb.zero_f(), sv.RunControls())
        assert sv.estimate_space_modulus(traj).worst == 0.0

    def test_stability_slope(self):
        dom = geo.interval(0.0, 2.0, 512)
        u0 = hj.field_from_function(dom, lambda p: np.abs(p[:, 0] - 1.0))
        spec = cc.make_spec(cc.norm_hamiltonian())
        fs = pb.zero_f()
        base = sig.brownian_sample(31, 0.2, 1 / 128)
        ctrl = sv.RunControls(output_times=[0.1, 0.2])
        ref = sv.solve(u0, base, spec, fs, ctrl)

        def run(a):
            pert = sig.DrivingPath(
                base.times,
                base.values + np.where(base.times > 0, a, 0.0)[:, None])
            alt = sv.solve(u0, pert, spec, fs, ctrl)
            d = max(float(np.max(np.abs(f1.values - f2.values)))
                    for (_, f1), (_, f2) in zip(ref, alt))
            return a, d

        h = dom.lattice.h_min
        rep = sv.estimate_stability_modulus(run, np.geomspace(2 * h, 0.4, 9))
        assert rep.passed, rep.details
        assert rep.details["slope"] >= 0.5

    def test_stability_rejects_degenerate_family(self):
        with pytest.raises(ValueError, match="degenerate"):
            sv.estimate_stability_modulus(lambda a: (a, 0.0), [0.1, 0.2])


def test_splitting_order_robustness():
    # swapping F-then-H to H-then-F changes the result by the one-segment
    # splitting residual, which shrinks as the path refines
    dom = geo.interval(0.0, 1.0, 128)
    u0 = random_lipschitz_field(dom, 3)
    spec = cc.make_spec(cc.norm_hamiltonian())
    fs = pb.heat_f()
    z = sig.brownian_sample(37, 0.05, 1 / 64)

    def order_gap(refine):
        a = sv.solve(u0, z, spec, fs,
                     sv.RunControls(h_then_f=False, path_refine=refine))
        b = sv.solve(u0, z, spec, fs,
                     sv.RunControls(h_then_f=True, path_refine=refine))
        return np.max(np.abs(a.final().values - b.final().values))

    g0, g2 = order_gap(0), order_gap(2)
    assert g2 <= 0.7 * g0
    assert g2 <= 3 * dom.lattice.h_min
