"""Tests for the periodic grid, initial fields, and spectral primitives."""

import numpy as np
import pytest
import scipy.fft as sfft
from hypothesis import given, settings
from hypothesis import strategies as st

from rotbec import (ConfigurationError, Field2D, Grid2D, boundary_mass,
                    gaussian_init, inner, integrate, kinetic_energy,
                    load_snapshot, lz_term, phase_align, random_init,
                    save_snapshot, spectral_gradient, vortex_init)
from rotbec.analysis import loop_winding
from rotbec.potential import harmonic


def test_grid_construction():
    g = Grid2D(n=128, L=8.0)
    assert g.dx == pytest.approx(16.0 / 128)
    assert g.x1[0] == -8.0
    assert g.x1[-1] == pytest.approx(8.0 - g.dx)
    assert np.allclose(g.K2, g.KX ** 2 + g.KY ** 2)


@pytest.mark.parametrize("n", [63, 96, 32, 2048])
def test_grid_rejects_bad_n(n):
    with pytest.raises(ConfigurationError):
        Grid2D(n=n, L=8.0)


def test_grid_rejects_bad_L():
    with pytest.raises(ConfigurationError):
        Grid2D(n=128, L=0.0)


def test_gaussian_init_properties():
    g = Grid2D(n=128, L=8.0)
    f = gaussian_init(g)
    assert f.mass == pytest.approx(1.0, abs=1e-12)
    # normalized width-1 profile has unit kinetic energy
    assert kinetic_energy(f) == pytest.approx(1.0, rel=1e-10)
    f2 = gaussian_init(g, width=2.0)
    assert kinetic_energy(f2) == pytest.approx(0.25, rel=1e-5)
    assert lz_term(f) == pytest.approx(0.0, abs=1e-12)


def test_gaussian_width_gate():
    g = Grid2D(n=64, L=16.0)  # dx = 0.5
    with pytest.raises(ConfigurationError):
        gaussian_init(g, width=1.0)  # under 4 cells


def test_vortex_init_properties():
    g = Grid2D(n=128, L=8.0)
    v = vortex_init(g, charge=1)
    assert v.mass == pytest.approx(1.0, abs=1e-12)
    assert lz_term(v) == pytest.approx(1.0, rel=1e-9)
    # amplitude zero sits inside the plaquette below-left of the origin,
    # so every lattice value is nonzero but the four surrounding it are tiny
    amp = np.abs(v.values)
    # the zero lies inside the center plaquette; its four corner nodes sit
    # dx/sqrt(2) away and the phase winds once around that cell
    assert amp[63:65, 63:65].max() < 0.2 * amp.max()
    assert loop_winding(v.values, 63, 64, 63, 64) == 1
    v2 = vortex_init(g, charge=-2)
    assert lz_term(v2) == pytest.approx(-2.0, rel=1e-9)


def test_random_init_deterministic_and_smooth():
    g = Grid2D(n=128, L=8.0)
    a = random_init(g, seed=7)
    b = random_init(g, seed=7)
    c = random_init(g, seed=8)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    assert a.mass == pytest.approx(1.0, abs=1e-12)
    # low-passed at 2/3 of the Nyquist wavenumber
    ah = sfft.fft2(a.values)
    kmax = float(np.abs(g.k1).max())
    assert np.abs(ah[g.K2 > (2.0 / 3.0 * kmax) ** 2]).max() < 1e-12


def test_integrate_and_inner():
    g = Grid2D(n=64, L=4.0)
    ones = np.ones((64, 64))
    assert integrate(g, ones) == pytest.approx((2 * g.L) ** 2)
    f = gaussian_init(g)
    assert inner(f, f).real == pytest.approx(1.0, abs=1e-12)
    assert abs(inner(f, f).imag) < 1e-15


def test_spectral_gradient_plane_wave():
    g = Grid2D(n=64, L=np.pi)
    k = 3.0  # integer multiple of pi/L = 1
    vals = np.exp(1j * k * g.X) / (2 * g.L)  # unit mass
    f = Field2D(grid=g, values=vals)
    dx_f, dy_f = spectral_gradient(f)
    assert np.allclose(dx_f.values, 1j * k * vals, atol=1e-12)
    assert np.allclose(dy_f.values, 0.0, atol=1e-12)


def test_kinetic_energy_matches_gradient():
    g = Grid2D(n=128, L=8.0)
    f = random_init(g, seed=3)
    dx_f, dy_f = spectral_gradient(f)
    direct = integrate(g, np.abs(dx_f.values) ** 2 + np.abs(dy_f.values) ** 2)
    assert kinetic_energy(f) == pytest.approx(direct, rel=1e-12)


def test_phase_align_recovers_rotation():
    g = Grid2D(n=64, L=6.0)
    f = random_init(g, seed=1)
    for theta in (0.3, 2.0, 5.9):
        rotated = Field2D(grid=g, values=np.exp(1j * theta) * f.values)
        th, dist = phase_align(rotated, f)
        # e^{i th} * rotated == f  =>  th = -theta (mod 2 pi)
        assert th == pytest.approx((-theta) % (2 * np.pi), abs=1e-12)
        assert dist < 1e-12


def test_boundary_mass():
    g = Grid2D(n=128, L=8.0)
    tight = gaussian_init(g, width=1.0)
    assert boundary_mass(tight) < 1e-12
    wide = gaussian_init(g, width=4.0)
    assert boundary_mass(wide) > boundary_mass(tight)


def test_snapshot_roundtrip(tmp_path):
    g = Grid2D(n=64, L=6.0)
    f = random_init(g, seed=42)
    path = tmp_path / "state.rbec"
    save_snapshot(path, f, a=5.5, omega=1.25, spec=harmonic())
    f2, a, omega, spec = load_snapshot(path)
    assert np.array_equal(f2.values, f.values)
    assert f2.grid.n == 64 and f2.grid.L == 6.0
    assert a == 5.5 and omega == 1.25
    assert spec.label == "power:2"


def test_snapshot_rejects_garbage(tmp_path):
    path = tmp_path / "bad.rbec"
    path.write_bytes(b"not a snapshot at all")
    with pytest.raises(ConfigurationError):
        load_snapshot(path)


def test_normalized_idempotent():
    g = Grid2D(n=64, L=6.0)
    f = Field2D(grid=g, values=3.7 * random_init(g, seed=9).values)
    nf = f.normalized()
    assert nf.mass == pytest.approx(1.0, abs=1e-13)
    assert np.allclose(nf.normalized().values, nf.values)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_random_fields_unit_mass(seed):
    g = Grid2D(n=64, L=6.0)
    f = random_init(g, seed=seed)
    assert f.mass == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(theta=st.floats(min_value=0.0, max_value=2 * np.pi, exclude_max=True),
       seed=st.integers(min_value=0, max_value=100))
def test_phase_align_property(theta, seed):
    g = Grid2D(n=64, L=6.0)
    f = random_init(g, seed=seed)
    rotated = Field2D(grid=g, values=np.exp(1j * theta) * f.values)
    th, dist = phase_align(f, rotated)
    # e^{i th} f == rotated => th = theta up to the branch choice
    assert dist < 1e-10
    assert min(abs(th - theta), abs(th - theta + 2 * np.pi),
               abs(th - theta - 2 * np.pi)) < 1e-9