import numpy as np
import pytest

from roughneumann import geometry as geo
from roughneumann import hjstep as hj
from roughneumann import mcf
from roughneumann import signal as sig
from roughneumann.solver import RunControls


SMALL = dict(n_cross=48, n_axis=192, T=0.04, dt=5e-4, scale=1.4)


def test_config_validation():
    with pytest.raises(ValueError):
        mcf.CylinderConfig(a=0.5, b=0.1)
    cfg = mcf.CylinderConfig(**SMALL)
    assert len(cfg.levels) == 3
    assert all(cfg.alpha < c < cfg.beta for c in cfg.levels)


def test_initial_field_band_structure():
    cfg = mcf.CylinderConfig(**SMALL, wiggle_amp=0.05, dip_depth=0.06)
    dom = cfg.domain()
    u0 = mcf.initial_field(cfg, dom)
    axis = dom.lattice.axis_centers(1)
    assert np.all(u0.values[:, axis <= cfg.a] == cfg.alpha)
    assert np.all(u0.values[:, axis >= cfg.b] == cfg.beta)
    assert np.all((u0.values >= cfg.alpha) & (u0.values <= cfg.beta))


class TestProfileFit:
    def test_monotone_profile_zero_distance(self):
        cfg = mcf.CylinderConfig(**SMALL)
        dom = cfg.domain()
        u0 = mcf.initial_field(cfg, dom)
        vhat, dist = mcf.fit_monotone_profile(u0)
        assert dist <= dom.lattice.spacing[-1] * 1.0  # <= h Lip
        assert np.all(np.diff(vhat) >= -1e-15)

    def test_wiggle_lower_bound(self):
        # x'-dependence of amplitude eps forces distance >= eps/2
        cfg = mcf.CylinderConfig(**SMALL, wiggle_amp=0.08)
        dom = cfg.domain()
        u0 = mcf.initial_field(cfg, dom)
        _, dist = mcf.fit_monotone_profile(u0)
        assert dist >= 0.08 / 2 - 1e-12

    def test_isotonic_is_sup_optimal(self):
        # oracle: brute-force check that no monotone profile beats the fit
        rng = np.random.default_rng(0)
        vals = np.cumsum(rng.standard_normal(40)) * 0.1
        dom = geo.interval(0.0, 1.0, 40)
        f = hj.Field(dom, vals)
        vhat, dist = mcf.fit_monotone_profile(f)
        # optimal sup-distance equals half the worst decreasing jump
        best = 0.5 * max(
            max((vals[i] - vals[j]) for j in range(i, len(vals)))
            for i in range(len(vals)))
        assert dist == pytest.approx(max(best, 0.0), abs=1e-12)


class TestLevelSets:
    def test_exact_profile_thin_band(self):
        cfg = mcf.CylinderConfig(**SMALL)
        dom = cfg.domain()
        u0 = mcf.initial_field(cfg, dom)
        vhat, _ = mcf.fit_monotone_profile(u0)
        c = cfg.levels[1]
        rep = mcf.level_set_metrics(u0, c, vhat)
        h = dom.lattice.spacing[-1]
        # strictly increasing ramp: both sets are one grid band
        assert rep.hausdorff <= np.hypot(dom.lattice.spacing[0], h) + h
        assert rep.m_plus - rep.m_minus <= 3 * h

    def test_fat_level_set(self):
        # u == c on a slab (1-Lipschitz ramps outside): the slab is the
        # level set and m+ - m- equals the slab width
        dom = geo.strip_cylinder(-1.0, 1.0, 16, 200)
        axis = dom.lattice.axis_centers(1)
        c = 0.5
        vals = np.clip(c + np.sign(axis) * np.maximum(np.abs(axis) - 0.3, 0),
                       0.0, 1.0)
        vals = np.broadcast_to(vals, dom.lattice.shape).copy()
        f = hj.Field(dom, vals)
        cells = mcf.level_set_cells(f, c)
        pts = dom.lattice.cell_centers()[cells]
        h = dom.lattice.spacing[-1]
        assert pts[:, 1].min() == pytest.approx(-0.3, abs=2 * h)
        assert pts[:, 1].max() == pytest.approx(0.3, abs=2 * h)


def test_oscillation_event_count():
    path = sig.DrivingPath(
        np.array([0.0, 1.0, 2.0, 3.0, 4.0]),
        np.array([[0.0], [0.3], [0.0], [0.3], [0.0]]))
    assert mcf.count_oscillation_events(path, 0.3) == 4
    assert mcf.count_oscillation_events(path, 0.7) == 0


def test_run_mcf_small_checks():
    cfg = mcf.CylinderConfig(**SMALL, seed=3, wiggle_amp=0.05)
    traj, reports, path = mcf.run_mcf(cfg, n_snapshots=5)
    h_ax = traj.fields[0].domain.lattice.spacing[-1]
    assert mcf.band_check(traj, path, cfg).passed
    assert mcf.width_monotone_check(reports, cfg, h_ax).passed
    rep = mcf.profile_contraction_check(reports, path, cfg)
    assert rep.passed, rep.details
    # t = 0 report equals initial-data analysis
    u0 = mcf.initial_field(cfg, traj.fields[0].domain)
    _, d0 = mcf.fit_monotone_profile(u0)
    assert reports[0][0].profile_dist == pytest.approx(d0, abs=1e-12)


def test_band_exit_error():
    cfg = mcf.CylinderConfig(**SMALL, seed=3, axis_pad=0.05)
    with pytest.raises(ValueError, match="band exits window"):
        mcf.run_mcf(cfg)


class TestOneDReduction:
    def test_monotone_data_trivially_nondecreasing(self):
        cfg = mcf.CylinderConfig(**{**SMALL, "T": 0.06}, seed=5)
        path = cfg.path()
        reps = mcf.one_d_reduction_check(cfg, path)
        names = {r.name: r for r in reps}
        assert names["1d_nondecreasing_at_that"].passed
        assert names["1d_window_formula"].passed
        assert names["1d_translation_law"].passed

    def test_dip_filled_by_oscillation(self):
        # u0 with an interior dip: the window formula fills it at t_hat
        cfg = mcf.CylinderConfig(**{**SMALL, "T": 0.06}, seed=5, dip_depth=0.12)
        path = cfg.path()
        dom = mcf.one_d_domain(cfg)
        u0 = mcf.one_d_initial(cfg, dom)
        assert mcf.fit_monotone_profile(u0)[1] > 0.01  # genuine dip
        reps = mcf.one_d_reduction_check(cfg, path)
        for r in reps:
            assert r.passed, r.line()

    def test_hypothesis_unmet_reported(self):
        cfg = mcf.CylinderConfig(**{**SMALL, "T": 0.001, "scale": 0.01}, seed=5)
        path = cfg.path()
        reps = mcf.one_d_reduction_check(cfg, path)
        assert not reps[0].passed
        assert "unmet" in reps[0].details.get("note", "")


def test_reduction_1d2d():
    cfg = mcf.CylinderConfig(n_cross=64, n_axis=256, T=0.03, dt=5e-4,
                             scale=1.4, seed=7, dip_depth=0.04)
    rep = mcf.reduction_1d2d_check(cfg)
    assert rep.passed, rep.line()


def test_hole_fill_probe_small():
    reps = mcf.hole_fill_probe(n_cross=48, n_axis=256)
    for r in reps:
        assert r.passed, (r.line(), r.details)
