"""Acceptance criteria, one test each; verdicts are listed at the end of the run.

Run just this file with ``pytest tests/test_acceptance.py -v``; the
"acceptance criteria" section of the terminal summary prints one
PASS/FAIL line per criterion.
"""

import time

import numpy as np
import pytest
from scipy.integrate import quad

from conftest import record
from dampwave import discretize as dz
from dampwave import evolve, fourier, spectral, waveguide


@pytest.fixture(scope="module")
def quad2_op():
    return dz.assemble_wave_operator(dz.build_grid(12.0, 400), dz.parse_profile("quad2"))


def test_ac1_explicit_spectrum(quad2_op):
    t0 = time.perf_counter()
    res = spectral.spectrum_wave(quad2_op)
    runtime = time.perf_counter() - t0
    found = res.lowest_upper(3)
    exact = [2 ** (1 / 3) * (2 * k + 1) ** (2 / 3) * np.exp(2j * np.pi / 3) for k in range(3)]
    mod_err = [abs(abs(f) - abs(e)) / abs(e) for f, e in zip(found, exact)]
    arg_err = [abs(np.degrees(np.angle(f) - np.angle(e))) for f, e in zip(found, exact)]
    conj_ok = res.conjugation_gap() <= 1e-8 * np.abs(res.eigenvalues).max()
    ok = max(mod_err) <= 5e-3 and max(arg_err) <= 0.5 and runtime <= 60 and conj_ok
    record("AC1", ok, f"max modulus err {max(mod_err):.2e}, max arg err {max(arg_err):.3f} deg, "
                      f"runtime {runtime:.1f} s")
    assert len(found) == 3
    assert max(mod_err) <= 5e-3
    assert max(arg_err) <= 0.5
    assert conj_ok
    assert runtime <= 60


def test_ac2_pseudospectrum_monotone(quad2_op):
    deltas = (0.5, 0.25, 0.125)
    up = [spectral.resolvent_norm(quad2_op, complex(-1, d)) for d in deltas]
    down = [spectral.resolvent_norm(quad2_op, complex(-1, -d)) for d in deltas]
    increasing = all(b > a for a, b in zip(up, up[1:]))
    sym = max(abs(u - d) / u for u, d in zip(up, down))
    record("AC2", increasing and sym <= 1e-8,
           f"norms {', '.join(f'{v:.4f}' for v in up)}; conjugate asymmetry {sym:.1e}")
    assert increasing
    assert sym <= 1e-8


def test_ac3_constant_damping_rates():
    t0 = time.perf_counter()
    times = np.geomspace(10, 200, 40)
    target = {"grad": -1.0, "dtu": -1.5, "u": -0.5}
    worst = 0.0
    for d in (1, 3):
        for seed in range(5):
            state = fourier.random_k_data(seed, d=d)
            ser = fourier.decay_series(state, times)
            for k, s in target.items():
                worst = max(worst, abs(fourier.fit_series(times, ser[k]).slope - s))
    runtime = time.perf_counter() - t0
    record("AC3", worst <= 0.1 and runtime <= 10,
           f"max slope deviation {worst:.3f} over 5 draws in d=1 and d=3, runtime {runtime:.2f} s")
    assert worst <= 0.1
    assert runtime <= 10


@pytest.mark.parametrize("j", [0, 1, 2])
def test_ac4_sharpness_constants(j):
    s_star = (j + 1) / 2
    state = fourier.witness_data(j, 100.0, s_star - 0.1, s_star + 0.1)
    ratio = fourier.sharpness_ratio(j, 100.0, state)
    cj = fourier.decay_constant(j)
    record("AC4", ratio >= cj - 0.05, f"j={j}: ratio {ratio:.4f} vs c_{j} = {cj:.4f}")
    assert ratio >= cj - 0.05


def test_ac5_heat_comparison():
    times = np.geomspace(10, 100, 20)
    powers = {"e0": 1.0, "e1": 1.5, "e2": 2.0}
    worst, consts, growth = 0.0, {}, 0.0
    for seed in range(5):
        state = fourier.random_energy_data(seed, d=1)
        errs = [fourier.comparison_error(t, state) for t in times]
        scale = fourier.h1l2_norm(state)
        for k, p in powers.items():
            vals = np.array([getattr(e, k) for e in errs])
            worst = max(worst, abs(fourier.fit_series(times, vals).slope + p))
            rescaled = times**p * vals / scale
            consts[k] = max(consts.get(k, 0.0), rescaled.max())
            half = rescaled.size // 2
            growth = max(growth, rescaled[half:].max() / rescaled[:half].max())
        assert not any(e.under_resolved for e in errs)
    ok = worst <= 0.15 and growth <= 1.1
    record("AC5", ok, f"max slope deviation {worst:.3f}; rescaled constants "
                      + ", ".join(f"{k} {v:.3g}" for k, v in consts.items())
                      + f"; late/early ratio {growth:.3f}")
    assert worst <= 0.15
    assert growth <= 1.1


def test_ac6_beta_improved_rates():
    out = []
    for seed in (0, 1):
        rep = evolve.run_decay_experiment({"profile": "bracket2", "L": 200.0, "N": 3999,
                                           "dt": 0.05, "t_max": 200.0, "seed": seed})
        assert "warning" not in rep
        out.append((rep["slopes"]["dtu"]["slope"], rep["slopes"]["u"]["slope"]))
    dtu = max(o[0] for o in out)
    u = max(o[1] for o in out)
    record("AC6", dtu <= -1.6 and u <= -0.65,
           f"worst dtu slope {dtu:.3f} (<= -1.6), worst u slope {u:.3f} (<= -0.65)")
    assert dtu <= -1.6
    assert u <= -0.65


def test_ac7_coercivity_exponents():
    comp = spectral.coercivity_exponent("composite").slope
    quad_ = spectral.coercivity_exponent("power2").slope
    ok = abs(comp - 1.0) <= 0.05 and abs(quad_ - 0.5) <= 0.05
    record("AC7", ok, f"composite {comp:.4f}, |x|^2 {quad_:.4f}")
    assert abs(comp - 1.0) <= 0.05
    assert abs(quad_ - 0.5) <= 0.05


@pytest.mark.parametrize("profile,expected", [("const1", 1.0), ("power2", 1.0 / 3.0)])
def test_ac8_kato_limit(profile, expected):
    b = 1e-3
    ratio = spectral.neumann_lowest(profile, b) / b
    prof = dz.parse_profile(profile)
    mean = quad(lambda s: float(prof(np.array(s))), -1, 1)[0] / 2
    assert abs(mean - expected) <= 1e-12
    err = abs(ratio - expected) / expected
    record("AC8", err <= 0.02, f"{profile}: lambda_0(b)/b = {ratio:.5f} vs {expected:.5f}")
    assert err <= 0.02


def test_ac9_waveguide_asymptotics():
    mu = waveguide.oscillator_eigs(1, 0)
    mu_err = abs(mu[0] - 1.0)
    js = np.unique(np.round(np.geomspace(10, 100, 10)).astype(int))
    fit = waveguide.gap_fit(0, 1, js, mu=mu[0])
    rel_res = fit.extra["max_residual"]
    ok = abs(fit.slope + 2.0) <= 0.2 and rel_res <= 1e-10 and mu_err <= 1e-6
    record("AC9", ok, f"gap slope {fit.slope:.3f} (target -2 +/- 0.2), "
                      f"max scaled residual {rel_res:.1e}, |mu_0 - 1| = {mu_err:.1e}")
    assert rel_res <= 1e-10
    assert mu_err <= 1e-6
    assert abs(fit.slope + 2.0) <= 0.2


@pytest.mark.parametrize("n", [1, 2])
def test_ac10_resolvent_growth(n):
    fit = waveguide.resolvent_growth_fit(n, (10.0, 1000.0))
    target = n / (n + 1)
    record("AC10", abs(fit.slope - target) <= 0.05,
           f"n={n}: slope {fit.slope:.4f} vs {target:.4f} (eigenvalue lower bound "
           f"{fit.extra['lower_fit']:.4f})")
    assert abs(fit.slope - target) <= 0.05


def test_ac10_strip_cross_check():
    worst_same, worst_cont = 0.0, 0.0
    for b in (1.0, 2.0, 4.0):
        grid2d = waveguide.strip_grid_norm(b, 1, 4.0, 60, 20)
        same = waveguide.strip_modes_on_grid(b, 1, 4.0, 60, 20)
        cont = waveguide.strip_resolvent_norm(b, 1).value
        worst_same = max(worst_same, abs(grid2d - same) / same)
        worst_cont = max(worst_cont, abs(grid2d - cont) / cont)
    ok = worst_same <= 0.02 and worst_cont <= 0.02
    record("AC10", ok, f"2D grid vs modes (same grid) {worst_same:.1e}, "
                       f"vs converged modes {worst_cont:.2%}")
    assert worst_same <= 0.02
    assert worst_cont <= 0.02


def test_ac11_bounded_resolvent():
    op = dz.assemble_wave_operator(dz.build_grid(6.0, 9599), dz.parse_profile("shifted"))
    scan = spectral.imaginary_axis_scan(op, 1.0, 100.0, 25)
    slope, spread = scan.fit().slope, scan.spread()
    record("AC11", spread <= 4 and abs(slope) <= 0.05,
           f"max/min {spread:.3f}, slope {slope:+.4f}")
    assert spread <= 4
    assert abs(slope) <= 0.05


def test_ac12_machinery(rng):
    grid = dz.build_grid(5.0, 40)
    op = dz.assemble_wave_operator(grid, dz.parse_profile("shifted"), dz.parse_profile("const1"))
    M = op.dense()
    fs = 0.0
    for _ in range(10):
        lam = complex(rng.uniform(-3, 1), rng.uniform(-6, 6))
        ref = np.linalg.inv(M - lam * np.eye(op.dim))
        fs = max(fs, np.abs(spectral.block_resolvent(op, lam) - ref).max() / np.abs(ref).max())
    diss = 0.0
    for _ in range(100):
        U = rng.standard_normal(op.dim) + 1j * rng.standard_normal(op.dim)
        _, v = op.split(U)
        lhs = op.inner(op.apply(U), U).real
        rhs = -op.vol * np.sum(op.a * np.abs(v) ** 2)
        diss = max(diss, abs(lhs - rhs) / op.inner(U, U).real)
    ref_op = dz.assemble_wave_operator(dz.build_grid(10.0, 100), dz.parse_profile("const1"))
    data = dz.make_k_data(0, ref_op)
    nf = dz.norm_H(data.F, ref_op)
    cdiff = 0.0
    for t in (1.0, 5.0, 10.0):
        c = evolve.contour_propagator(ref_op, data.F, t)
        cn = evolve.cn_state(ref_op, data.F, t, 0.002)
        cdiff = max(cdiff, dz.norm_H(c.U - cn, ref_op) / nf)
    ok = fs <= 1e-10 and diss <= 1e-12 and cdiff <= 1e-3
    record("AC12", ok, f"block formula {fs:.1e}, contour vs CN {cdiff:.1e}, "
                       f"dissipativity {diss:.1e}")
    assert fs <= 1e-10
    assert cdiff <= 1e-3
    assert diss <= 1e-12
