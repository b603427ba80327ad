"""Acceptance gates: one test per numbered criterion, with a pass/fail
summary line per criterion printed at the end of the run."""

import itertools
import math
import time

import numpy as np
import pytest
from conftest import SWEEP_RATIOS, criterion

from rotbec import (Field2D, Grid2D, MinimizeConfig, RegimeError,
                    diamagnetic_check, effective_potential,
                    energy_lower_bound_check, gauge_energy_offset,
                    gauge_translate, gaussian_init, gp_energy, gp_problem,
                    harmonic, lambda_const, minimize, phase_align,
                    quartic_quadratic, shifted_harmonic, trial_energy_scan,
                    vortex_init)
from rotbec.analysis import (blowup_rescale, bounded_trend,
                             compare_nonrotating, fit_scaling,
                             linearized_spectrum, mu_limit_check,
                             winding_numbers)
from rotbec.townes import a_star_midpoint, solve_townes, townes_constants


def test_criterion_01_townes_constants():
    with criterion(1, "reference profile constants and identities"):
        t0 = time.perf_counter()
        profile = solve_townes()
        consts = townes_constants(profile)
        mid = a_star_midpoint(profile)
        elapsed = time.perf_counter() - t0
        # mass by Simpson vs midpoint-at-halved-step quadrature
        assert abs(mid - consts.a_star) / consts.a_star < 1e-6
        # int |grad w|^2 = int w^2 = (1/2) int w^4
        assert abs(consts.grad_sq - consts.a_star) / consts.a_star < 1e-6
        assert abs(0.5 * consts.m4 - consts.a_star) / consts.a_star < 1e-6
        assert elapsed < 5.0


def test_criterion_02_linear_baseline():
    with criterion(2, "linear oscillator baseline at three rotation speeds"):
        for omega in (0.0, 1.0, 1.9):
            cfg = MinimizeConfig(n=256, L=12.0, seed=1, perturb_amp=0.0)
            res = minimize(gp_problem(0.0, omega, harmonic()), cfg)
            assert res.converged
            assert res.breakdown.total == pytest.approx(2.0, abs=1e-5)
            assert abs(res.breakdown.rotation) <= 1e-8


def _lam_harmonic(consts, profile):
    return lambda_const(effective_potential(harmonic(), 1.0), consts,
                        profile)


def test_criterion_03_energy_scaling(harmonic_sweep, consts, profile):
    with criterion(3, "energy power law exponent and coefficient"):
        lam = _lam_harmonic(consts, profile)
        pts = [(r.a, abs(r.breakdown.total)) for r in harmonic_sweep]
        fit = fit_scaling(pts, "energy", consts.a_star, 2.0, lam)
        assert abs(fit.exponent - 0.5) <= 0.05
        pred = 2.0 * lam ** 2 / consts.a_star
        assert abs(fit.coefficient - pred) / pred <= 0.10
        assert fit.r_squared >= 0.99


def test_criterion_04_blowup_length(harmonic_sweep, consts, profile):
    with criterion(4, "width against the predicted (a*-a)^(1/4) law"):
        lam = _lam_harmonic(consts, profile)
        for r in harmonic_sweep[-2:]:
            predicted = (consts.a_star - r.a) ** 0.25 / lam
            assert 0.9 <= r.eps_a / predicted <= 1.1


def test_criterion_05_profile_convergence(harmonic_sweep, profile, consts):
    with criterion(5, "rescaled modulus converges to the reference profile"):
        errs = [blowup_rescale(r, profile, consts).modulus_sup_err
                for r in harmonic_sweep]
        assert all(b < a for a, b in zip(errs, errs[1:]))
        # 2e-3 interpolation budget subtracted from the 0.05 gate
        assert errs[-1] < 0.05 - 2e-3


def test_criterion_06_multiplier_limit(harmonic_sweep, consts):
    with criterion(6, "chemical potential limit and remainder trend"):
        rep = mu_limit_check(harmonic_sweep, consts.a_star)
        assert rep.in_range
        assert rep.trend_ok


def test_criterion_07_vortex_free_unique(multistart_battery, profile,
                                         consts):
    with criterion(7, "vortex-free minimizers, unique up to phase"):
        for (ratio, omega), runs in multistart_battery.items():
            assert len(runs) == 4
            for res in runs:
                assert res.converged, (ratio, omega)
                assert winding_numbers(res.field) == []
                obs = blowup_rescale(res, profile, consts)
                dxc = obs.coords[1] - obs.coords[0]
                norm = math.sqrt(float((np.abs(obs.w_a) ** 2).sum())
                                 * dxc * dxc)
                assert obs.imag_l2 / norm < 1e-3
            for fa, fb in itertools.combinations(
                    [res.field for res in runs], 2):
                _, dist = phase_align(fa, fb)
                assert dist < 1e-3, (ratio, omega)


def test_criterion_08_nonexistence_scans(consts, profile):
    with criterion(8, "trial-family collapse above the two thresholds"):
        a_star = consts.a_star
        # (i) supercritical interaction: slope of energy against tau^2
        prob = gp_problem(1.1 * a_star, 1.0, harmonic(),
                          unsafe_nonexistence=True)
        scan = trial_energy_scan(prob, np.geomspace(1.0, 40.0, 16),
                                 profile=profile, consts=consts)
        pred = (1.0 - 1.1) * consts.m4 / (2.0 * a_star)
        assert scan.slope < 0.0
        assert abs(scan.slope - pred) / abs(pred) <= 0.10
        wide = trial_energy_scan(prob, np.geomspace(1.0, 120.0, 8),
                                 profile=profile, consts=consts)
        assert float(wide.energy.min()) < -1e3
        # (ii) supercritical rotation: energy drains as the center moves out
        fast = gp_problem(0.0, 3.0, harmonic(), unsafe_nonexistence=True)
        taus = np.geomspace(0.5, 20.0, 24)
        mins = [float(trial_energy_scan(fast, taus, x0=(d, 0.0),
                                        profile=profile,
                                        consts=consts).energy.min())
                for d in (5.0, 10.0, 20.0)]
        assert mins[1] < mins[0]
        assert mins[0] - mins[2] > 1e2


def test_criterion_09_critical_velocity_split(consts):
    with criterion(9, "flat-bottom trap minimizes past the harmonic limit"):
        with pytest.raises(RegimeError, match="critical velocity"):
            gp_problem(0.5 * consts.a_star, 2.5, harmonic())
        prob = gp_problem(0.5 * consts.a_star, 2.5,
                          quartic_quadratic(1.0, 4.0))
        res = minimize(prob, MinimizeConfig(n=256, L=12.0, seed=5))
        assert res.converged
        assert res.residual < 1e-6


def test_criterion_10_linearized_spectra(profile, consts):
    with criterion(10, "reduced linearization spectra"):
        t0 = time.perf_counter()
        ker = linearized_spectrum(profile, op="L", sector=0, count=1,
                                  consts=consts)
        assert abs(ker.lowest_eigs[0]) < 1e-3
        assert ker.kernel_cosine > 0.9999
        der = linearized_spectrum(profile, op="L_hat", sector=1, count=1,
                                  consts=consts)
        assert abs(der.lowest_eigs[0]) < 1e-3
        neg = linearized_spectrum(profile, op="L_hat", sector=0, count=1,
                                  consts=consts)
        assert neg.lowest_eigs[0] <= -3.9
        assert time.perf_counter() - t0 < 10.0


def test_criterion_11_rotating_vs_nonrotating(harmonic_sweep, nonrot_sweep,
                                              consts, profile):
    with criterion(11, "rotating/non-rotating modulus distance trend"):
        lam = _lam_harmonic(consts, profile)
        ratios = []
        for rot, non in zip(harmonic_sweep, nonrot_sweep):
            assert rot.a == pytest.approx(non.a, rel=1e-12)
            alpha = (consts.a_star - rot.a) ** 0.25 / lam
            d = compare_nonrotating(rot, non, profile, consts)
            ratios.append(d / alpha ** 2)
        assert bounded_trend(ratios)


def _hermite_random(grid, seed):
    rng = np.random.default_rng(seed)
    vals = np.zeros(grid.X.shape, dtype=complex)
    for j in range(4):
        for k in range(4 - j):
            cjk = rng.normal() + 1j * rng.normal()
            vals += cjk * grid.X ** j * grid.Y ** k
    vals *= np.exp(-0.5 * (grid.X ** 2 + grid.Y ** 2))
    return Field2D(grid=grid, values=vals).normalized()


def test_criterion_12_gauge_covariance():
    with criterion(12, "field-independent energy offset of the moved trap"):
        g = Grid2D(n=128, L=8.0)
        b = (0.3, -0.2)
        omega = 1.0
        shifted_prob = gp_problem(3.0, omega, shifted_harmonic(*b))
        centered_prob = gp_problem(3.0, omega, harmonic())
        offset = gauge_energy_offset(b, omega)
        measured = []
        for seed in range(5):
            u = _hermite_random(g, seed)
            fs = gp_energy(u, shifted_prob).total
            fc = gp_energy(gauge_translate(u, b, omega),
                           centered_prob).total
            measured.append(fs - fc)
            assert fs - fc == pytest.approx(offset, abs=1e-8)
        assert max(measured) - min(measured) <= 1e-8


def test_criterion_13_property_suite(quick_result, harmonic_sweep, consts):
    with criterion(13, "conservation, descent, invariance, bound slacks"):
        t0 = time.perf_counter()
        # mass conservation
        for res in [quick_result] + list(harmonic_sweep):
            assert res.field.mass == pytest.approx(1.0, abs=1e-12)
        # energy descent after the burn-in steps
        h = quick_result.energy_history
        diffs = np.diff(h[10:])
        assert np.all(diffs <= 1e-12 * np.maximum(1.0, np.abs(h[10:-1])))
        # phase invariance of every energy term
        prob = gp_problem(quick_result.a, quick_result.omega, harmonic())
        f = quick_result.field
        base = gp_energy(f, prob).total
        for theta in (0.3, 2.0):
            g2 = Field2D(grid=f.grid, values=f.values * np.exp(1j * theta))
            assert gp_energy(g2, prob).total == pytest.approx(base,
                                                              abs=1e-11)
        # diamagnetic slack on assorted fields
        grid = Grid2D(n=128, L=8.0)
        for fld in (f, gaussian_init(grid), vortex_init(grid, charge=1),
                    _hermite_random(grid, 4)):
            assert diamagnetic_check(fld, 1.5).slack >= -1e-9
        # interpolation-inequality lower bound below the threshold
        for fld in (f, gaussian_init(grid), _hermite_random(grid, 6)):
            pr = gp_problem(0.9 * consts.a_star, 1.0, harmonic())
            assert energy_lower_bound_check(fld, pr,
                                            consts.a_star) >= -1e-8
        # determinism of seeded runs
        cfg = MinimizeConfig(n=128, L=12.0, seed=9)
        r1 = minimize(gp_problem(0.0, 1.0, harmonic()), cfg)
        r2 = minimize(gp_problem(0.0, 1.0, harmonic()), cfg)
        assert np.array_equal(r1.field.values, r2.field.values)
        assert r1.breakdown.total == r2.breakdown.total
        assert r1.steps == r2.steps
        assert time.perf_counter() - t0 < 120.0
