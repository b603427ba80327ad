"""Tests for the radial reference-profile solver and its derived constants."""

import math

import numpy as np
import pytest

from rotbec import (ConfigurationError, Grid2D, a_star_midpoint,
                    export_profile, integrate, ode_residual, radial_moment,
                    sample_w_2d, solve_townes, townes_constants)

# frozen oracle values for the default resolution (r_max=20, h_r=0.005)
W0 = 2.2062008639402615
A_STAR = 11.700896524869531
GRAD_SQ = 11.700896521741917
M4 = 23.401793056285044
M2 = 13.89486163499901


def test_frozen_constants(consts):
    assert consts.w0 == pytest.approx(W0, rel=1e-10)
    assert consts.a_star == pytest.approx(A_STAR, rel=1e-10)
    assert consts.grad_sq == pytest.approx(GRAD_SQ, rel=1e-10)
    assert consts.m4 == pytest.approx(M4, rel=1e-10)
    assert consts.m2 == pytest.approx(M2, rel=1e-10)


def test_mass_identities(consts):
    # the three norms agree pairwise at the shared critical value
    assert consts.grad_sq == pytest.approx(consts.a_star, rel=1e-6)
    assert consts.m4 == pytest.approx(2.0 * consts.a_star, rel=1e-6)


def test_midpoint_cross_check(profile, consts):
    mid = a_star_midpoint(profile)
    assert mid == pytest.approx(consts.a_star, rel=1e-6)


def test_ode_residual_small(profile):
    res = ode_residual(profile)
    assert float(np.max(np.abs(res))) < 1e-6


def test_profile_shape(profile):
    w = profile.w_vals
    assert profile.w0 == w[0]
    assert np.all(w > 0)
    # monotone decay away from the axis
    assert np.all(np.diff(w) < 0)
    assert np.all(profile.dw_vals[1:] < 0)
    assert profile.dw_vals[0] == pytest.approx(0.0, abs=1e-8)
    # far tail is exponentially small
    assert w[-1] < 1e-7


def test_tail_decay_rate(profile):
    # w ~ r^{-1/2} e^{-r}: log(w sqrt(r)) decays with slope -1 in the tail
    r = profile.r
    sel = (r > 8) & (r < 14)
    y = np.log(profile.w_vals[sel] * np.sqrt(r[sel]))
    slope = np.polyfit(r[sel], y, 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.02)


def test_radial_moments(profile, consts):
    assert radial_moment(profile, 2.0) == pytest.approx(consts.m2, rel=1e-12)
    m0 = radial_moment(profile, 0.0)
    assert m0 == pytest.approx(consts.a_star, rel=1e-9)
    # positive and increasing with the radial weight beyond power 0
    assert radial_moment(profile, 4.0) > radial_moment(profile, 2.0) > 0


def test_spline_interpolates_nodes(profile):
    sp = profile.spline()
    r = profile.r[::97]
    assert np.allclose(sp(r), profile.w_vals[::97], rtol=0, atol=1e-12)
    # midpoints stay within the bracketing node values (monotone data)
    mid = 0.5 * (profile.r[:-1] + profile.r[1:])
    vals = sp(mid)
    assert np.all(vals <= profile.w_vals[:-1] + 1e-12)
    assert np.all(vals >= profile.w_vals[1:] - 1e-12)


def test_sample_w_2d_mass(profile, consts):
    grid = Grid2D(n=512, L=24.0)
    f = sample_w_2d(profile, grid)
    mass = integrate(grid, np.abs(f.values) ** 2)
    # 2D mass of the unscaled profile equals the critical strength
    assert mass == pytest.approx(consts.a_star, rel=1e-6)


def test_sample_w_2d_scale_and_center(profile):
    grid = Grid2D(n=512, L=12.0)
    # center chosen on a grid node so the peak sample hits r = 0 exactly
    f = sample_w_2d(profile, grid, center=(0.75, -0.75), scale=2.0)
    iy, ix = np.unravel_index(int(np.argmax(np.abs(f.values))), f.values.shape)
    assert grid.x1[ix] == pytest.approx(0.75, abs=1e-12)
    assert grid.x1[iy] == pytest.approx(-0.75, abs=1e-12)
    # u(center) = w(0)
    assert float(np.max(np.abs(f.values))) == pytest.approx(profile.w0,
                                                            rel=1e-10)


def test_export_profile_roundtrip(profile, tmp_path):
    path = tmp_path / "profile.dat"
    export_profile(profile, path)
    data = np.loadtxt(path)
    assert data.shape == (profile.r.size, 2)
    assert np.allclose(data[:, 0], profile.r)
    assert np.allclose(data[:, 1], profile.w_vals)


def test_solver_rejects_bad_config():
    with pytest.raises(ConfigurationError):
        solve_townes(r_max=10.0)
    with pytest.raises(ConfigurationError):
        solve_townes(h_r=0.01)
    with pytest.raises(ConfigurationError):
        solve_townes(tol=1e-9)


def test_refined_solver_consistent(consts):
    fine = townes_constants(solve_townes(r_max=24.0, h_r=0.004))
    assert fine.a_star == pytest.approx(consts.a_star, rel=1e-9)
    assert fine.w0 == pytest.approx(consts.w0, rel=1e-9)
    assert fine.m2 == pytest.approx(consts.m2, rel=1e-8)
